"""Bias-preserving gates on detuned Kerr cats.

Zeno Z rotations drive ``eps_Z(t) (a + a†)`` on top of the confinement.  The
X gate rotates the confinement in phase space, ``alpha -> alpha e^{i theta}``,
while a feed-forward ``-theta' a†a`` makes the rotation exact.  The CNOT
rotates the target's confinement conditionally on the control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse

from .dynamics import NoiseParams, evolve_ode, setup_mode
from .filters import FilterParams, build_colored_lindbladian, default_filter
from .fock import (
    FockBasis,
    SystemParams,
    annihilation,
    default_basis,
    fidelity,
    number,
)
from .spectral import CodeStates, code_states, diagonalize


class IllConditionedControlError(ValueError):
    pass


# ---------------------------------------------------------------- pulses


@dataclass(frozen=True, eq=False)
class Pulse:
    """Real drive envelope on ``[0, T]`` normalized so that
    ``4 sqrt(nbar) * integral = target_angle``."""

    shape: str
    T: float
    target_angle: float
    nbar: float
    profile: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.T)
        return np.where(inside, self.profile(np.clip(t, 0.0, self.T)), 0.0)

    @property
    def area(self) -> float:
        return self.target_angle / (4.0 * math.sqrt(self.nbar))

    def peak(self) -> float:
        grid = np.linspace(0.0, self.T, 2001)
        return float(np.abs(self(grid)).max())


def gaussian_pulse(
    T: float,
    angle: float,
    nbar: float,
    sigma_fraction: float = 1.0 / 6.0,
    edge: str = "cut",
) -> Pulse:
    """Gaussian centred at ``T/2`` with ``sigma = T * sigma_fraction``.

    ``edge="cut"`` truncates at the endpoints, leaving a small step there;
    ``edge="shifted"`` subtracts the endpoint value so the envelope starts
    and ends at zero.  Either way the area is normalized exactly.
    """
    if T <= 0:
        raise ValueError("pulse duration must be positive")
    if edge not in ("cut", "shifted"):
        raise ValueError(f"unknown edge treatment {edge!r}")
    sigma = T * sigma_fraction
    area = angle / (4.0 * math.sqrt(nbar))
    full = sigma * math.sqrt(2 * math.pi) * math.erf(T / (2 * math.sqrt(2) * sigma))
    base = 0.0
    if edge == "shifted":
        base = math.exp(-(T**2) / (8 * sigma**2))
        full -= T * base
    amp = area / full

    def profile(t):
        return amp * (np.exp(-((t - T / 2) ** 2) / (2 * sigma**2)) - base)

    return Pulse(f"gaussian-{edge}", T, angle, nbar, profile)


def constant_pulse(T: float, angle: float, nbar: float) -> Pulse:
    if T <= 0:
        raise ValueError("pulse duration must be positive")
    amp = angle / (4.0 * math.sqrt(nbar) * T)
    return Pulse("constant", T, angle, nbar, lambda t: np.full(np.shape(t), amp))


def custom_pulse(T: float, angle: float, nbar: float, samples: Sequence[float]) -> Pulse:
    """Piecewise-linear envelope through equally spaced ``samples``, rescaled
    to the target area."""
    y = np.asarray(samples, dtype=float)
    if T <= 0 or len(y) < 2:
        raise ValueError("need T > 0 and at least two samples")
    x = np.linspace(0.0, T, len(y))
    raw = float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))
    area = angle / (4.0 * math.sqrt(nbar))
    if raw == 0:
        if area != 0:
            raise ValueError("samples integrate to zero; cannot reach a nonzero angle")
        scale = 0.0
    else:
        scale = area / raw
    ys = y * scale
    return Pulse("custom", T, angle, nbar, lambda t: np.interp(t, x, ys))


# ------------------------------------------------------------- schedules


@dataclass(frozen=True)
class Schedule:
    """Angle ramp ``theta(t)`` from 0 to ``theta_final`` over ``[0, T]``."""

    T: float
    theta_final: float = math.pi
    kind: str = "smoothstep"

    def __post_init__(self):
        if self.kind not in ("smoothstep", "linear"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.T <= 0:
            raise ValueError("schedule duration must be positive")

    def theta(self, t: float) -> float:
        s = min(max(t / self.T, 0.0), 1.0)
        if self.kind == "linear":
            return self.theta_final * s
        return self.theta_final * (3 * s**2 - 2 * s**3)

    def rate(self, t: float) -> float:
        if t < 0 or t > self.T:
            return 0.0
        s = t / self.T
        if self.kind == "linear":
            return self.theta_final / self.T
        return self.theta_final * (6 * s - 6 * s**2) / self.T

    def ramp(self, t: float) -> float:
        """Normalized profile in [0, 1], for parameter ramps."""
        return self.theta(t) / self.theta_final if self.theta_final else 0.0


# --------------------------------------------------------------- results


@dataclass(frozen=True, eq=False)
class GateResult:
    final_state: np.ndarray = field(repr=False)
    fidelity: float
    p_z: float = 0.0
    p_z_na: Optional[float] = None
    p_z_na_codespace: Optional[float] = None
    leakage: float = 0.0
    details: dict = field(default_factory=dict, repr=False)


def _codespace_fidelity(rho: np.ndarray, target: np.ndarray, plus: np.ndarray, minus: np.ndarray):
    basis = np.column_stack([plus, minus])
    r = basis.conj().T @ rho @ basis
    inside = float(np.real(np.trace(r)))
    t = basis.conj().T @ target
    f = float(np.real(np.vdot(t, r @ t))) / inside if inside > 0 else 0.0
    return f, 1.0 - inside


# ------------------------------------------------------------------ Zeno


def zeno_target(code: CodeStates, pulse: Pulse) -> np.ndarray:
    """Ideal rotated state from ``|+>`` using the exact code-space element
    ``<+|(a + a†)|-> = 2 alpha_tilde``."""
    phi = 2.0 * code.alpha_tilde * pulse.area
    return math.cos(phi) * code.ket_plus - 1j * math.sin(phi) * code.ket_minus


def zeno_z_gate(
    params: SystemParams,
    pulse: Pulse,
    noise: Optional[NoiseParams] = None,
    fp: Optional[FilterParams] = None,
    kappa_eng: Optional[float] = None,
    M: int = 3,
    n_trunc: Optional[int] = None,
    dim_cap: int = 56,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> GateResult:
    """Zeno rotation from ``|+>_m`` in the truncated Hamiltonian eigenbasis.

    Without noise or filter the ket is propagated.  Otherwise the density
    matrix is, with the filter chain attached when ``fp`` or ``kappa_eng``
    is given.  ``p_z_na`` (one minus fidelity to the ideal rotation) is
    reported only when ambient noise is absent; ``p_z`` is the loss estimate
    ``nbar kappa1 T``.
    """
    colored = fp is not None or kappa_eng is not None
    n_trunc = n_trunc or (14 if colored else 20)
    setup = setup_mode(params, n_trunc)
    code = setup.code
    eig = setup.eig
    x = setup.a + setup.a.conj().T
    h0 = eig.hamiltonian()
    plus = eig.project_state(code.ket_plus)
    minus = eig.project_state(code.ket_minus)
    target = eig.project_state(zeno_target(code, pulse))
    ambient = noise is not None and not noise.is_zero
    times = np.array([0.0, pulse.T])

    if not colored and not ambient:
        e = np.diag(h0)

        def rhs(t, y):
            return -1j * (e * y + float(pulse(t)) * (x @ y))

        psi = evolve_ode(rhs, plus, times, rtol=rtol, atol=atol)[-1]
        rho = np.outer(psi, psi.conj())
        details = {"dim": len(psi)}
        rho_cat = rho
    else:
        if colored:
            fp = fp or default_filter(setup, M=M, kappa_eng=kappa_eng)
            sysm = build_colored_lindbladian(setup, fp, noise if ambient else None, dim_cap=dim_cap)
            nf = fp.M + 1
            vac = np.zeros(nf)
            vac[0] = 1.0
            h_static = sysm.lindbladian.hamiltonian
            drive = np.kron(x, np.eye(nf))
            jumps = sysm.lindbladian.jumps
            psi0 = np.kron(plus, vac)
            details = {"filter": fp, "kappa_eng": fp.kappa_eng}
        else:
            h_static = h0
            drive = x
            jumps = tuple((op, r) for op, r in setup.noise_jumps(noise) if r > 0)
            psi0 = plus
            details = {}
        n = h_static.shape[0]
        decay = sum((r * op.conj().T @ op for op, r in jumps), np.zeros((n, n), dtype=complex))
        h_eff0 = h_static - 0.5j * decay

        def rhs(t, y):
            r = y.reshape(n, n)
            h = h_eff0 + float(pulse(t)) * drive
            out = -1j * (h @ r - r @ h.conj().T)
            for op, rate in jumps:
                out += rate * (op @ r @ op.conj().T)
            return out.reshape(-1)

        rho = evolve_ode(rhs, np.outer(psi0, psi0.conj()).reshape(-1), times, rtol=rtol, atol=atol)[-1]
        rho = rho.reshape(n, n)
        if colored:
            d, nf = eig.dim, fp.M + 1
            rho_cat = np.einsum("iaja->ij", rho.reshape(d, nf, d, nf))
            details["filter_excitation"] = float(1.0 - np.real(np.einsum("iaia->a", rho.reshape(d, nf, d, nf))[0]))
        else:
            rho_cat = rho
        details["dim"] = n
    f = fidelity(rho_cat, target)
    f_cs, leak = _codespace_fidelity(rho_cat, target, plus, minus)
    p_z = code.nbar * noise.kappa1 * pulse.T if noise is not None else 0.0
    return GateResult(
        final_state=rho_cat,
        fidelity=f,
        p_z=p_z,
        p_z_na=None if ambient else 1.0 - f,
        p_z_na_codespace=None if ambient else 1.0 - f_cs,
        leakage=leak,
        details=details,
    )


# ---------------------------------------------------------------- X gate


def rotated_hamiltonian(params: SystemParams, basis: FockBasis, theta: float, theta_dot: float = 0.0) -> np.ndarray:
    """``K (a†² - alpha² e^{-2i theta})(a² - alpha² e^{2i theta}) - Delta n
    - theta_dot n``."""
    a = annihilation(basis).matrix
    n = number(basis).matrix
    a2 = a @ a
    z = params.alpha**2 * np.exp(2j * theta)
    eye = np.eye(basis.dim)
    left = a2.conj().T - np.conj(z) * eye
    right = a2 - z * eye
    return params.K * left @ right - (params.delta + theta_dot) * n


def x_gate(
    params: SystemParams,
    schedule: Schedule,
    basis: Optional[FockBasis] = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> GateResult:
    """Rotate the confinement by ``schedule.theta_final`` with feed-forward,
    starting from ``|0>_m`` in the Fock basis.

    The fidelity is taken against ``exp(i theta_final n)|0>_m``, which is
    ``|1>_m`` for a half turn.
    """
    basis = basis or default_basis(params)
    spec = diagonalize(params, basis, n_levels=2)
    code = code_states(spec)
    a = annihilation(basis).matrix
    n_diag = np.arange(basis.dim, dtype=float)
    K = params.K
    a2 = a @ a
    static = np.diag(K * n_diag * (n_diag - 1) - params.delta * n_diag + K * params.alpha**4).astype(complex)
    up = -K * params.alpha**2 * a2.conj().T

    def rhs(t, y):
        th = schedule.theta(t)
        u = np.exp(2j * th) * up
        h = static + u + u.conj().T
        return -1j * (h @ y - schedule.rate(t) * n_diag * y)

    psi = evolve_ode(rhs, code.ket0, [0.0, schedule.T], rtol=rtol, atol=atol)[-1]
    target = np.exp(1j * schedule.theta_final * n_diag) * code.ket0
    f = fidelity(psi, target)
    return GateResult(
        final_state=np.outer(psi, psi.conj()),
        fidelity=f,
        details={"target": target, "ket": psi, "dim": basis.dim},
    )


# ------------------------------------------------------------------ CNOT


@dataclass(frozen=True, eq=False)
class CnotGenerator:
    """Conditional-rotation Hamiltonian split as
    ``S + e^{-2i theta} C + e^{2i theta} C† + theta_dot F``.

    The control operator ``a_c`` is a parameter so the generator can be
    evaluated with a scalar stand-in for the control mode.
    """

    static: scipy.sparse.spmatrix
    rotating: scipy.sparse.spmatrix
    feed_forward: scipy.sparse.spmatrix
    dims: tuple

    def at(self, theta: float, theta_dot: float) -> scipy.sparse.spmatrix:
        c = np.exp(-2j * theta) * self.rotating
        return self.static + c + c.conj().T + theta_dot * self.feed_forward

    def dense(self, theta: float, theta_dot: float) -> np.ndarray:
        return self.at(theta, theta_dot).toarray()


def cnot_generator(
    params_c: SystemParams,
    params_t: SystemParams,
    a_c: np.ndarray,
    a_t: np.ndarray,
    alpha_tilde_c: float,
    nbar_t: float,
) -> CnotGenerator:
    if abs(alpha_tilde_c) < 1e-6:
        raise IllConditionedControlError(f"control displacement {alpha_tilde_c:.2e} too small")
    if params_c.K != params_t.K or params_c.delta != params_t.delta:
        raise ValueError("control and target must share K and delta")
    K, delta = params_c.K, params_c.delta
    sp = scipy.sparse
    a_c = sp.csr_matrix(np.asarray(a_c, dtype=complex))
    a_t = sp.csr_matrix(np.asarray(a_t, dtype=complex))
    dc, dt = a_c.shape[0], a_t.shape[0]
    ic, it = sp.identity(dc, dtype=complex, format="csr"), sp.identity(dt, dtype=complex, format="csr")
    n_c = a_c.conj().T @ a_c
    n_t = a_t.conj().T @ a_t
    ac2 = a_c @ a_c
    al2c = params_c.alpha**2
    al2t = params_t.alpha**2
    ctrl = K * (ac2.conj().T - al2c * ic) @ (ac2 - al2c * ic)
    p_minus = (alpha_tilde_c * ic - a_c) / (2 * alpha_tilde_c)
    p_plus = (alpha_tilde_c * ic + a_c) / (2 * alpha_tilde_c)
    # Target bracket b(theta) = b0 + e^{-2i theta} b1; the Hamiltonian holds
    # b† b so the two brackets are adjoint to each other.
    b0 = sp.kron(ic, a_t @ a_t) - al2t * sp.kron(p_plus, it)
    b1 = -al2t * sp.kron(p_minus, it)
    static = (
        sp.kron(ctrl, it)
        - delta * sp.kron(n_c, it)
        - delta * sp.kron(ic, n_t)
        + K * (b0.conj().T @ b0 + b1.conj().T @ b1)
    )
    rotating = K * (b0.conj().T @ b1)
    ff_c = (2 * alpha_tilde_c * ic - a_c.conj().T - a_c) / (4 * alpha_tilde_c)
    ff = sp.kron(ff_c, n_t - nbar_t * it)
    return CnotGenerator(static.tocsr(), rotating.tocsr(), ff.tocsr(), (dc, dt))


def cnot_hamiltonian(
    t: float,
    params_c: SystemParams,
    params_t: SystemParams,
    schedule: Schedule,
    basis_c: Optional[FockBasis] = None,
    basis_t: Optional[FockBasis] = None,
) -> np.ndarray:
    """Two-mode CNOT generator at time ``t`` on ``basis_c ⊗ basis_t``."""
    gen, *_ = _cnot_setup(params_c, params_t, basis_c, basis_t)
    return gen.dense(schedule.theta(t), schedule.rate(t))


def _cnot_setup(params_c, params_t, basis_c, basis_t):
    basis_c = basis_c or default_basis(params_c)
    basis_t = basis_t or default_basis(params_t)
    code_c = code_states(diagonalize(params_c, basis_c, n_levels=2))
    code_t = code_states(diagonalize(params_t, basis_t, n_levels=2))
    gen = cnot_generator(
        params_c,
        params_t,
        annihilation(basis_c).matrix,
        annihilation(basis_t).matrix,
        code_c.alpha_tilde,
        code_t.nbar,
    )
    return gen, code_c, code_t


def cnot_gate(
    params_c: SystemParams,
    params_t: SystemParams,
    schedule: Schedule,
    basis_c: Optional[FockBasis] = None,
    basis_t: Optional[FockBasis] = None,
    max_dim: int = 2500,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> GateResult:
    """Truth table of the conditional rotation over ``|c>|t>``, c, t in {0, 1}.

    ``details["truth_table"][(c, t)]`` is the fidelity of the output with
    ``|c> ⊗ |t xor c>`` (for ``theta_final = pi``).  ``fidelity`` is the
    minimum over the four branches.
    """
    gen, code_c, code_t = _cnot_setup(params_c, params_t, basis_c, basis_t)
    dc, dt = gen.dims
    if dc * dt > max_dim:
        raise ValueError(f"two-mode dimension {dc * dt} exceeds cap {max_dim}")
    ket_c = (code_c.ket0, code_c.ket1)
    ket_t = (code_t.ket0, code_t.ket1)
    flip = abs(math.cos(schedule.theta_final / 2)) < 1e-12
    static, rot, ffw = gen.static, gen.rotating, gen.feed_forward
    rot_h = rot.conj().T.tocsr()

    def rhs(t, y):
        z = np.exp(-2j * schedule.theta(t))
        hy = static @ y + z * (rot @ y) + np.conj(z) * (rot_h @ y) + schedule.rate(t) * (ffw @ y)
        return -1j * hy

    table = {}
    finals = {}
    for c in (0, 1):
        for tq in (0, 1):
            psi0 = np.kron(ket_c[c], ket_t[tq])
            out_t = tq ^ c if flip else tq
            target = np.kron(ket_c[c], ket_t[out_t])
            psi = evolve_ode(rhs, psi0, [0.0, schedule.T], rtol=rtol, atol=atol)[-1]
            table[(c, tq)] = fidelity(psi, target)
            finals[(c, tq)] = psi
    worst = min(table.values())
    return GateResult(
        final_state=finals[(1, 0)],
        fidelity=worst,
        details={"truth_table": table, "dims": gen.dims, "finals": finals},
    )


# ----------------------------------------------------- adiabatic preparation


@dataclass(frozen=True)
class Ramp:
    """Linear-in-``eps2`` and linear-in-``Delta`` path between two working
    points (``alpha² `` and ``delta`` interpolate with ``profile``)."""

    alpha_start: float
    alpha_end: float
    delta_start: float = 0.0
    delta_end: float = 0.0
    profile: str = "linear"

    def fraction(self, s: float) -> float:
        s = min(max(s, 0.0), 1.0)
        if self.profile == "linear":
            return s
        if self.profile == "smoothstep":
            return 3 * s**2 - 2 * s**3
        raise ValueError(f"unknown ramp profile {self.profile!r}")

    def at(self, s: float) -> tuple[float, float]:
        f = self.fraction(s)
        a2 = self.alpha_start**2 + (self.alpha_end**2 - self.alpha_start**2) * f
        return a2, self.delta_start + (self.delta_end - self.delta_start) * f


def adiabatic_prepare(
    ramp: Ramp,
    T: float,
    start: str = "vacuum",
    noise: Optional[NoiseParams] = None,
    basis: Optional[FockBasis] = None,
    K: float = 1.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> GateResult:
    """Follow the ramp from its initial state.

    ``start="vacuum"`` begins in Fock vacuum and targets ``|+>`` of the final
    working point; ``start="code0"`` begins in ``|0>`` of the initial working
    point and targets ``|0>`` of the final one.
    """
    p_end = SystemParams(ramp.alpha_end, ramp.delta_end, K)
    basis = basis or default_basis(p_end)
    code_end = code_states(diagonalize(p_end, basis, n_levels=2))
    if start == "vacuum":
        psi0 = basis.vacuum()
        target = code_end.ket_plus
    elif start == "code0":
        p0 = SystemParams(ramp.alpha_start, ramp.delta_start, K)
        psi0 = code_states(diagonalize(p0, basis, n_levels=2)).ket0
        target = code_end.ket0
    else:
        raise ValueError(f"unknown start {start!r}")
    n_diag = np.arange(basis.dim, dtype=float)
    a = annihilation(basis).matrix
    a2d = (a @ a).conj().T
    kerr = K * n_diag * (n_diag - 1)

    def hamiltonian(t):
        a2, dlt = ramp.at(t / T if T > 0 else 1.0)
        h = np.diag(kerr - dlt * n_diag + K * a2**2).astype(complex)
        drive = -K * a2 * a2d
        return h + drive + drive.conj().T

    if T <= 0:
        rho = np.outer(psi0, psi0.conj())
    elif noise is None or noise.is_zero:

        def rhs(t, y):
            return -1j * (hamiltonian(t) @ y)

        psi = evolve_ode(rhs, psi0, [0.0, T], rtol=rtol, atol=atol)[-1]
        rho = np.outer(psi, psi.conj())
    else:
        ops = [(a, noise.kappa_minus), (a.conj().T, noise.kappa_plus), (np.diag(n_diag).astype(complex), noise.kappa_phi)]
        ops = [(o, r) for o, r in ops if r > 0]
        d = basis.dim
        decay = sum(r * o.conj().T @ o for o, r in ops)

        def rhs(t, y):
            r = y.reshape(d, d)
            h = hamiltonian(t) - 0.5j * decay
            out = -1j * (h @ r - r @ h.conj().T)
            for o, k in ops:
                out += k * (o @ r @ o.conj().T)
            return out.reshape(-1)

        rho = evolve_ode(rhs, np.outer(psi0, psi0.conj()).reshape(-1), [0.0, T], rtol=rtol, atol=atol)[-1]
        rho = rho.reshape(d, d)
    f = fidelity(rho, target)
    _, leak = _codespace_fidelity(rho, target, code_end.ket_plus, code_end.ket_minus)
    return GateResult(final_state=rho, fidelity=f, leakage=leak, details={"target": target, "dim": basis.dim})
