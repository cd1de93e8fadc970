"""Lindblad dynamics of the detuned Kerr oscillator.

Generators are stored as dense superoperators acting on row-major vectorized
density matrices, ``vec(rho)[i*d + j] = rho[i, j]``, so that
``vec(A rho B) = kron(A, B.T) @ vec(rho)``.

When every Hamiltonian term commutes with a diagonal ±1 parity and every jump
operator is either parity-even or parity-odd, the superoperator is block
diagonal in the sign of ``p_i p_j``.  :class:`Lindbladian` detects this and
exponentiates the two blocks separately, which is 4x cheaper than the full
matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize
import scipy.sparse

from .fock import (
    FockBasis,
    QuantumOperator,
    SystemParams,
    annihilation,
    default_basis,
    number,
    sign_x_observable,
)
from .spectral import CodeStates, Spectrum, code_states, diagonalize
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

DEFAULT_TRUNCATION = 20


class IntegratorFailure(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseParams:
    """Ambient noise: single-photon loss ``kappa1`` at thermal population
    ``nth`` plus Markovian dephasing ``kappa_phi`` (rates in K)."""

    kappa1: float = 0.0
    nth: float = 0.0
    kappa_phi: float = 0.0

    def __post_init__(self):
        for name in ("kappa1", "nth", "kappa_phi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def kappa_minus(self) -> float:
        return self.kappa1 * (1.0 + self.nth)

    @property
    def kappa_plus(self) -> float:
        return self.kappa1 * self.nth

    def leakage_rate(self, alpha: float) -> float:
        return self.nth * self.kappa1 + alpha**2 * self.kappa_phi

    @property
    def is_zero(self) -> bool:
        return self.kappa1 == 0 and self.kappa_phi == 0


BENCHMARK_NOISE = NoiseParams(kappa1=1e-3, nth=1e-2, kappa_phi=1e-5)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """First ``n`` eigenstates of a :class:`Spectrum`, ordered
    (phi0+, phi0-, phi1+, phi1-, ...)."""

    spectrum: Spectrum
    energies: np.ndarray
    states: np.ndarray
    parity: np.ndarray

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum, n_trunc: int) -> "EigenBasis":
        energies, states = spectrum.ordered(n_trunc)
        parity = np.where(np.arange(n_trunc) % 2 == 0, 1.0, -1.0)
        return cls(spectrum, energies - spectrum.gauge_offset, states, parity)

    @property
    def dim(self) -> int:
        return len(self.energies)

    def project(self, op) -> np.ndarray:
        m = op.matrix if isinstance(op, QuantumOperator) else np.asarray(op)
        return self.states.conj().T @ m @ self.states

    def project_state(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi)
        if psi.ndim == 1:
            return self.states.conj().T @ psi
        return self.states.conj().T @ psi @ self.states

    def lift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 1:
            return self.states @ x
        return self.states @ x @ self.states.conj().T

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)


def project_to_eigenbasis(obj, spectrum: Spectrum, n_trunc: int = DEFAULT_TRUNCATION):
    """Matrix elements (operator or density matrix) or amplitudes (ket) of
    ``obj`` in the first ``n_trunc`` eigenstates."""
    available = 2 * spectrum.n_pairs
    if n_trunc > available:
        raise ValueError(f"n_trunc={n_trunc} exceeds the {available} available levels")
    eb = EigenBasis.from_spectrum(spectrum, n_trunc)
    if isinstance(obj, QuantumOperator):
        return eb.project(obj)
    return eb.project_state(obj)


def _as_matrix(op, dim: Optional[int] = None) -> np.ndarray:
    m = op.matrix if isinstance(op, QuantumOperator) else np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be square, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"basis mismatch: operator dim {m.shape[0]} vs {dim}")
    return m


@dataclass(frozen=True, eq=False)
class Lindbladian:
    hamiltonian: np.ndarray
    jumps: tuple
    matrix: np.ndarray = field(repr=False)
    parity: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for op, rate in self.jumps:
            lr = op @ rho
            ldl = op.conj().T @ op
            out += rate * (lr @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return out

    def adjoint_apply(self, x: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action; zero on the identity for a
        trace-preserving generator."""
        h = self.hamiltonian
        out = 1j * (h @ x - x @ h)
        for op, rate in self.jumps:
            ld = op.conj().T
            ldl = ld @ op
            out += rate * (ld @ x @ op - 0.5 * (ldl @ x + x @ ldl))
        return out

    @cached_property
    def sectors(self) -> list[np.ndarray]:
        d = self.dim
        if self.parity is None:
            return [np.arange(d * d)]
        pp = np.outer(self.parity, self.parity).ravel()
        idx = [np.flatnonzero(pp > 0), np.flatnonzero(pp < 0)]
        cross = self.matrix[np.ix_(idx[0], idx[1])]
        scale = max(np.abs(self.matrix).max(), 1.0)
        if cross.size and np.abs(cross).max() > 1e-12 * scale:
            return [np.arange(d * d)]
        cross = self.matrix[np.ix_(idx[1], idx[0])]
        if cross.size and np.abs(cross).max() > 1e-12 * scale:
            return [np.arange(d * d)]
        return idx

    @cached_property
    def blocks(self) -> list[np.ndarray]:
        return [self.matrix[np.ix_(i, i)] for i in self.sectors]

    @cached_property
    def real_frames(self) -> list[tuple]:
        """Per sector ``(T, R)`` with ``R = T† B T`` real.

        ``T`` maps the coordinates ``(rho_ii, sqrt2 Re rho_ij, -sqrt2 Im
        rho_ij)`` of a Hermitian matrix to its vectorization.  Each sector is
        closed under transposition, so ``T`` is unitary within it and real
        arithmetic suffices for exponentials and kernels.
        """
        d = self.dim
        frames = []
        for idx, block in zip(self.sectors, self.blocks):
            pos = np.full(d * d, -1)
            pos[idx] = np.arange(len(idx))
            rows, cols, vals = [], [], []
            col = 0
            h = 1.0 / math.sqrt(2.0)
            for k in idx:
                i, j = divmod(int(k), d)
                if i == j:
                    rows.append(pos[k])
                    cols.append(col)
                    vals.append(1.0)
                    col += 1
                elif i < j:
                    kt = j * d + i
                    rows += [pos[k], pos[kt], pos[k], pos[kt]]
                    cols += [col, col, col + 1, col + 1]
                    vals += [h, h, -1j * h, 1j * h]
                    col += 2
            n = len(idx)
            t = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
            full = t.conj().T @ (t.T @ block.T).T
            real = np.ascontiguousarray(full.real)
            if np.abs(full.imag).max() > 1e-10 * max(np.abs(real).max(), 1.0):
                raise ValueError("generator does not preserve Hermiticity")
            frames.append((t, real))
        return frames


def build_lindbladian(H, jumps: Sequence = (), parity: Optional[np.ndarray] = None) -> Lindbladian:
    """Superoperator ``-i[H, .] + sum_k rate_k D[L_k]``.

    ``jumps`` holds ``(operator, rate)`` pairs; zero rates are dropped.  A
    ``parity`` vector of ±1 in the working basis enables block-sparse
    propagation (checked, silently ignored if it is not a symmetry).
    """
    h = _as_matrix(H)
    d = h.shape[0]
    if isinstance(H, QuantumOperator):
        for op, _ in jumps:
            if isinstance(op, QuantumOperator) and op.basis != H.basis:
                raise ValueError("basis mismatch between Hamiltonian and jump operator")
    ops = tuple((_as_matrix(op, d), float(rate)) for op, rate in jumps if rate != 0)
    for _, rate in ops:
        if rate < 0:
            raise ValueError("jump rates must be nonnegative")
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in ops:
        ldl = op.conj().T @ op
        sup += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    if parity is not None:
        parity = np.asarray(parity, dtype=float)
        if parity.shape != (d,):
            raise ValueError("parity vector length must equal the basis dimension")
    return Lindbladian(h, ops, sup, parity)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def expect(self, op) -> np.ndarray:
        m = _as_matrix(op)
        return np.real(np.einsum("ij,tji->t", m, self.states))

    @property
    def trace_drift(self) -> float:
        tr = np.real(np.einsum("tii->t", self.states))
        return float(np.abs(tr - 1.0).max())

    @property
    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.states + np.conj(np.swapaxes(self.states, 1, 2)))
        return float(np.linalg.eigvalsh(herm).min())

    def check_cptp(self, tol=DEFAULT) -> None:
        if self.trace_drift > tol.trace_drift:
            raise IntegratorFailure(f"trace drift {self.trace_drift:.2e} along trajectory")
        if self.min_eigenvalue < tol.trajectory_psd_floor:
            raise IntegratorFailure(f"negative eigenvalue {self.min_eigenvalue:.2e} along trajectory")


class Propagator:
    """``exp(L dt)`` applied block by block, cached per step size.

    Exponentials are taken of the real form of each block.  ``only`` in
    :meth:`apply` restricts work to a subset of sector indices; the other
    components come back as zero.
    """

    def __init__(self, lindbladian: Lindbladian):
        self.lindbladian = lindbladian
        self._cache: dict[tuple, np.ndarray] = {}

    def step_matrix(self, sector: int, dt: float) -> np.ndarray:
        key = (sector, float(dt))
        if key not in self._cache:
            real = self.lindbladian.real_frames[sector][1]
            self._cache[key] = scipy.linalg.expm(real * dt)
        return self._cache[key]

    def apply(self, vec: np.ndarray, dt: float, only: Optional[Sequence[int]] = None) -> np.ndarray:
        out = np.zeros(vec.shape, dtype=complex)
        frames = self.lindbladian.real_frames
        for k, idx in enumerate(self.lindbladian.sectors):
            if only is not None and k not in only:
                continue
            t = frames[k][0]
            x = t.conj().T @ vec[idx]
            out[idx] = t @ (self.step_matrix(k, dt) @ x)
        return out


def _evolve_spectral(lindbladian: Lindbladian, vec0: np.ndarray, times: np.ndarray, verify_tol: float):
    """All samples from one eigendecomposition per block.

    Returns None when the decomposition is too ill-conditioned to reproduce a
    direct exponential at the final time within ``verify_tol``.
    """
    out = np.empty((len(times), vec0.size), dtype=complex)
    t_end = times[-1]
    for idx, (t, real) in zip(lindbladian.sectors, lindbladian.real_frames):
        x0 = t.conj().T @ vec0[idx]
        w, v = scipy.linalg.eig(real)
        try:
            coef = np.linalg.solve(v, x0)
        except np.linalg.LinAlgError:
            return None
        w = np.where(w.real > 0, 1j * w.imag, w)  # rounding-level growth
        xs = (np.exp(np.outer(times, w)) * coef[None, :]) @ v.T
        out[:, idx] = (t @ xs.T).T
        ref = scipy.linalg.expm(real * t_end) @ x0
        scale = max(np.linalg.norm(x0), 1e-300)
        if np.linalg.norm(xs[-1] - ref) > verify_tol * scale:
            return None
    return out


def evolve(
    lindbladian: Lindbladian,
    rho0: np.ndarray,
    times: Sequence[float],
    check: bool = True,
    method: str = "auto",
    tol=DEFAULT,
) -> Trajectory:
    """Density matrices at ``times`` (measured from t=0, where ``rho0`` holds).

    ``method="expm"`` exponentiates the generator between consecutive
    samples (equal steps reuse the cached propagator).  ``"auto"`` first
    tries a single eigendecomposition per parity block and falls back to
    ``"expm"`` if it fails to match a direct exponential at the last time
    to 1e-8 (both routes carry ~eps*|L|*t rounding at long horizons).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be nonnegative and strictly increasing")
    d = lindbladian.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    if rho0.shape != (d, d):
        raise ValueError(f"initial state shape {rho0.shape} does not match dim {d}")
    vec = rho0.reshape(-1).copy()
    flat = None
    if method == "auto":
        flat = _evolve_spectral(lindbladian, vec, times, 1e-8)
        if flat is None:
            log.info("spectral propagation not accurate enough; using expm steps")
    elif method != "expm":
        raise ValueError(f"unknown method {method!r}")
    if flat is None:
        prop = Propagator(lindbladian)
        flat = np.empty((len(times), d * d), dtype=complex)
        t_prev = 0.0
        for k, t in enumerate(times):
            dt = t - t_prev
            if dt > 0:
                # Snap nearly equal steps so uniform grids hit the cache.
                dt = round(dt, 12) if abs(dt - round(dt, 12)) < 1e-13 * max(dt, 1) else dt
                vec = prop.apply(vec, dt)
            flat[k] = vec
            t_prev = t
    traj = Trajectory(times, flat.reshape(len(times), d, d))
    if check:
        traj.check_cptp(tol)
    return traj


def evolve_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: Sequence[float],
    rtol: float = 1e-10,
    atol: float = 1e-12,
    method: str = "DOP853",
    max_step: float = np.inf,
) -> np.ndarray:
    """Adaptive Runge-Kutta propagation for time-dependent generators.

    ``y0`` may be a ket or a flattened density matrix; returns the samples
    at ``times`` stacked along axis 0.
    """
    times = np.asarray(times, dtype=float)
    y0 = np.asarray(y0, dtype=complex)
    if times[-1] == times[0]:
        return np.repeat(y0[None, :], len(times), axis=0)
    sol = scipy.integrate.solve_ivp(
        rhs,
        (times[0], times[-1]),
        y0,
        method=method,
        t_eval=times,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if not sol.success:
        raise IntegratorFailure(
            f"{method} failed ({sol.message}); project onto a truncated eigenbasis "
            "to remove the fast Fock-space frequencies"
        )
    return sol.y.T


def _null_space(mat: np.ndarray, rel_tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(mat)
    cut = rel_tol * max(s[0], 1.0)
    null = s < cut
    return vh[null].conj().T, u[:, null], s


def steady_state(
    lindbladian: Lindbladian,
    rho0: Optional[np.ndarray] = None,
    tol=DEFAULT,
) -> np.ndarray:
    """Kernel element of the generator, normalized to unit trace.

    When the kernel is larger than one dimension (conserved quantities at
    zero noise) the infinite-time limit of ``rho0`` is returned; that is the
    spectral projection of ``rho0`` onto the kernel along the left null
    vectors.  Without ``rho0`` an ambiguous kernel raises
    :class:`SteadyStateError`.
    """
    d = lindbladian.dim
    vec0 = None
    if rho0 is not None:
        rho0 = np.asarray(rho0, dtype=complex)
        if rho0.ndim == 1:
            rho0 = np.outer(rho0, rho0.conj())
        vec0 = rho0.reshape(-1)
    out = np.zeros(d * d, dtype=complex)
    kernel_dims = []
    for idx, (t, real) in zip(lindbladian.sectors, lindbladian.real_frames):
        right, left, s = _null_space(real, tol.kernel_rel)
        kernel_dims.append(right.shape[1])
        if right.shape[1] == 0:
            continue
        if vec0 is None:
            if right.shape[1] > 1 or len(kernel_dims) > 1:
                raise SteadyStateError(
                    f"kernel of dimension {right.shape[1]} in sector {len(kernel_dims) - 1}; "
                    f"smallest singular values {np.sort(s)[:4]}; pass rho0 to select one"
                )
            out[idx] = t @ right[:, 0]
        else:
            x0 = t.conj().T @ vec0[idx]
            coef = np.linalg.solve(left.conj().T @ right, left.conj().T @ x0)
            out[idx] = t @ (right @ coef)
    rho = out.reshape(d, d)
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise SteadyStateError("kernel element has vanishing trace")
    rho = rho / tr
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.linalg.norm(lindbladian.apply(rho))
    if residual > tol.steady_residual * max(1.0, np.linalg.norm(lindbladian.hamiltonian)):
        raise SteadyStateError(f"steady-state residual {residual:.2e}")
    log.debug("steady state kernel dims per sector: %s", kernel_dims)
    return rho


@dataclass(frozen=True)
class DecayFit:
    """``values ~ amplitude * exp(-2 gamma t)`` over ``window``."""

    gamma: float
    amplitude: float
    residual_rms: float
    window: tuple
    below_resolution: bool = False
    warning: Optional[str] = None
    times: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def fit_decay(
    times: Sequence[float],
    values: Sequence[float],
    window_start: float = 0.0,
    window_end: float = np.inf,
    resolution: float = 1e-9,
) -> DecayFit:
    """Least-squares fit of a single exponential ``A exp(-2 gamma t)``.

    The starting point comes from a log-linear regression on the positive
    samples.  ``below_resolution`` is set when the fitted decay changes the
    signal by less than ``resolution`` (relative) across the window.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (t >= window_start) & (t <= window_end)
    t, v = t[sel], v[sel]
    if len(t) < 10:
        raise ValueError(f"need at least 10 samples in the fit window, got {len(t)}")
    warn = None
    pos = v > 0
    if pos.sum() >= 2:
        slope, intercept = np.polyfit(t[pos], np.log(v[pos]), 1)
        g0, a0 = -slope / 2, math.exp(intercept)
    else:
        g0, a0 = 0.0, float(np.mean(v))
    scale_t = t[-1] if t[-1] > 0 else 1.0
    span = t[-1] - t[0]

    def resid(x):
        return x[0] * np.exp(-2 * x[1] / scale_t * t) - v

    res = scipy.optimize.least_squares(
        resid, [a0, g0 * scale_t], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    amp, gamma = float(res.x[0]), float(res.x[1] / scale_t)
    rms = float(np.sqrt(np.mean(res.fun**2)))
    noise = max(rms, 1e-15)
    if np.any(v < -3 * noise) or np.any(np.diff(v) > 3 * noise + 1e-12 * np.abs(v[:-1])):
        warn = "data not monotonically decaying within fit noise"
    below = abs(2 * gamma * span) < resolution
    if gamma < 0 and not below:
        warn = (warn + "; " if warn else "") + "fitted rate is negative"
    return DecayFit(gamma, amp, rms, (float(t[0]), float(t[-1])), below, warn, t, v)


@dataclass(frozen=True, eq=False)
class ModeSetup:
    """Everything the open-system pipelines need at one working point."""

    params: SystemParams
    spectrum: Spectrum
    code: CodeStates
    eig: EigenBasis
    a: np.ndarray
    n: np.ndarray
    sign_x: np.ndarray
    rho0: np.ndarray

    def noise_jumps(self, noise: NoiseParams) -> list:
        return [
            (self.a, noise.kappa_minus),
            (self.a.conj().T, noise.kappa_plus),
            (self.n, noise.kappa_phi),
        ]


def setup_mode(
    params: SystemParams,
    n_trunc: int = DEFAULT_TRUNCATION,
    basis: Optional[FockBasis] = None,
) -> ModeSetup:
    n_levels = (n_trunc + 1) // 2
    basis = basis or default_basis(params, min_dim=2 * n_levels + 16)
    spec = diagonalize(params, basis, n_levels=max(n_levels, 2))
    code = code_states(spec)
    eig = EigenBasis.from_spectrum(spec, n_trunc)
    a = eig.project(annihilation(basis))
    n = eig.project(number(basis))
    s = eig.project(sign_x_observable(basis))
    x0 = eig.project_state(code.ket0)
    return ModeSetup(params, spec, code, eig, a, n, s, np.outer(x0, x0.conj()))


def mode_lindbladian(setup: ModeSetup, noise: NoiseParams) -> Lindbladian:
    return build_lindbladian(setup.eig.hamiltonian(), setup.noise_jumps(noise), setup.eig.parity)


def log_times(kappa1: float, n_samples: int = 200, lo: float = 0.01, hi: float = 100.0) -> np.ndarray:
    k = kappa1 if kappa1 > 0 else 1e-3
    return np.logspace(math.log10(lo / k), math.log10(hi / k), n_samples)


def excursion_rate(
    params: SystemParams,
    noise: NoiseParams,
    horizon: Optional[float] = None,
    n_trunc: int = DEFAULT_TRUNCATION,
    n_samples: int = 200,
    window_start: Optional[float] = None,
    basis: Optional[FockBasis] = None,
    setup: Optional[ModeSetup] = None,
) -> DecayFit:
    """Decay rate of ``<sign(a + a†)>`` starting from ``|0>_m``.

    Time grid: ``n_samples`` log-spaced points over ``[0.01, 100]/kappa1``
    (``horizon`` rescales the upper end).  The fit window starts at
    ``window_start`` (default ``0.5/kappa1``).
    """
    setup = setup or setup_mode(params, n_trunc, basis)
    k1 = noise.kappa1 if noise.kappa1 > 0 else 1e-3
    hi = 100.0 if horizon is None else horizon * k1
    times = log_times(k1, n_samples, hi=hi)
    lind = mode_lindbladian(setup, noise)
    traj = evolve(lind, setup.rho0, times)
    values = traj.expect(setup.sign_x)
    start = 0.5 / k1 if window_start is None else window_start
    return fit_decay(times, values, window_start=start)


def pair_populations(rho: np.ndarray) -> np.ndarray:
    """Total population of each parity pair for ``rho`` in the ordered eigenbasis."""
    diag = np.real(np.diag(rho))
    if len(diag) % 2:
        diag = np.append(diag, 0.0)
    return diag[0::2] + diag[1::2]


def mean_excitation_degenerate(rho: np.ndarray, m: int) -> float:
    """Population-weighted mean pair index over the degenerate pairs ``n <= m``."""
    p = pair_populations(rho)[: m + 1]
    total = p.sum()
    if total < 1e-12:
        raise ValueError("no population in the degenerate manifold")
    return float(np.dot(np.arange(len(p)), p) / total)


def leakage(rho: np.ndarray, ket_plus: np.ndarray, ket_minus: np.ndarray) -> float:
    """Population outside span{|+>, |->}."""
    rho = np.asarray(rho)
    inside = np.vdot(ket_plus, rho @ ket_plus) + np.vdot(ket_minus, rho @ ket_minus)
    return float(min(max(1.0 - inside.real, 0.0), 1.0))


def steady_state_populations(
    params: SystemParams,
    noise: NoiseParams,
    n_trunc: int = DEFAULT_TRUNCATION,
    setup: Optional[ModeSetup] = None,
) -> np.ndarray:
    """Diagonal of the steady state (reached from ``|0>_m``) in the eigenbasis."""
    setup = setup or setup_mode(params, n_trunc)
    rho = steady_state(mode_lindbladian(setup, noise), setup.rho0)
    return np.real(np.diag(rho))


def convergence_check(
    pipeline: Callable,
    params: SystemParams,
    *args,
    observable: Callable = lambda r: r,
    tol=DEFAULT,
    **kwargs,
) -> tuple[bool, float]:
    """Rerun ``pipeline`` at 1.25x Fock dimension and compare an observable.

    Returns ``(converged, relative_difference)``.
    """
    base = default_basis(params, min_dim=DEFAULT_TRUNCATION + 16)
    r0 = observable(pipeline(params, *args, basis=base, **kwargs))
    r1 = observable(pipeline(params, *args, basis=base.enlarged(tol.convergence_scale), **kwargs))
    r0, r1 = np.asarray(r0, dtype=float), np.asarray(r1, dtype=float)
    denom = np.maximum(np.abs(r1), 1e-300)
    rel = float(np.max(np.abs(r0 - r1) / denom))
    return rel < tol.convergence_rel, rel
