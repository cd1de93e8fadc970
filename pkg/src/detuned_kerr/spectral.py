"""Parity-resolved spectra of the detuned Kerr Hamiltonian.

At ``delta = 2 m K`` the first ``m + 1`` even/odd level pairs are exactly
degenerate.  Those pairs can be computed independently from an
``(m+1) x (m+1)`` tridiagonal matrix in the frame displaced by ``±alpha``;
:func:`displaced_block_hamiltonian` and :func:`analytic_degenerate_states`
provide that route as a cross-check of :func:`diagonalize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.optimize

from .fock import (
    FockBasis,
    SystemParams,
    build_hamiltonian,
    default_basis,
    number,
    parity_signs,
    sign_x_observable,
    _displacement_matrix,
)
from .tolerances import DEFAULT

DEFAULT_LEVELS = 20


class DegeneracyResolutionError(RuntimeError):
    pass


class NotBlockableError(ValueError):
    pass


class NonDegenerateGroundError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of ``H`` split by photon-number parity.

    Energies are the raw eigenvalues of :func:`build_hamiltonian`;
    ``gauge_offset`` is the even ground energy, subtracted when exporting.
    State arrays hold eigenvectors as columns in the Fock basis.
    """

    params: SystemParams
    basis: FockBasis
    even_energies: np.ndarray
    even_states: np.ndarray
    odd_energies: np.ndarray
    odd_states: np.ndarray

    @property
    def gauge_offset(self) -> float:
        return float(self.even_energies[0])

    @property
    def n_pairs(self) -> int:
        return min(len(self.even_energies), len(self.odd_energies))

    @property
    def pair_spacings(self) -> np.ndarray:
        n = self.n_pairs
        return self.odd_energies[:n] - self.even_energies[:n]

    def level(self, n: int, sign: int) -> tuple[float, np.ndarray]:
        if sign > 0:
            return float(self.even_energies[n]), self.even_states[:, n]
        return float(self.odd_energies[n]), self.odd_states[:, n]

    def ordered(self, n_states: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        """Energies and states interleaved as (phi0+, phi0-, phi1+, phi1-, ...)."""
        n = self.n_pairs
        energies = np.empty(2 * n)
        states = np.empty((self.basis.dim, 2 * n), dtype=complex)
        energies[0::2] = self.even_energies[:n]
        energies[1::2] = self.odd_energies[:n]
        states[:, 0::2] = self.even_states[:, :n]
        states[:, 1::2] = self.odd_states[:, :n]
        if n_states is not None:
            if n_states > 2 * n:
                raise ValueError(
                    f"requested {n_states} eigenstates but only {2 * n} are available"
                )
            energies, states = energies[:n_states], states[:, :n_states]
        return energies, states


@dataclass(frozen=True, eq=False)
class CodeStates:
    ket0: np.ndarray
    ket1: np.ndarray
    ket_plus: np.ndarray
    ket_minus: np.ndarray
    nbar: float
    alpha_tilde: float
    basis: FockBasis


@dataclass(frozen=True, eq=False)
class DegenerateManifold:
    """Pairs ``n <= m``: right/left-well states and their parity components."""

    m: int
    right_states: np.ndarray
    left_states: np.ndarray
    energies: np.ndarray
    block_vectors: np.ndarray
    even_states: np.ndarray
    odd_states: np.ndarray


def _fix_phases(states: np.ndarray, ladder: np.ndarray) -> np.ndarray:
    # Largest overlap with the displaced Fock ladder made real positive.
    overlaps = ladder.conj().T @ states
    idx = np.argmax(np.abs(overlaps), axis=0)
    ref = overlaps[idx, np.arange(states.shape[1])]
    return states * (np.abs(ref) / ref)[None, :]


def diagonalize(
    params: SystemParams,
    basis: Optional[FockBasis] = None,
    n_levels: int = DEFAULT_LEVELS,
    tol=DEFAULT,
) -> Spectrum:
    """Dense eigendecomposition, each parity sector diagonalized on its own.

    Working sector by sector means exactly degenerate pairs can never come
    back mixed across parities.
    """
    basis = basis or default_basis(params, min_dim=2 * n_levels + 2)
    h = build_hamiltonian(params, basis).matrix
    signs = parity_signs(basis.dim)
    ladder = _displacement_matrix(params.alpha, basis.dim)
    sectors = []
    for s in (1.0, -1.0):
        idx = np.flatnonzero(signs == s)
        block = h[np.ix_(idx, idx)]
        if np.abs(block.imag).max() == 0.0:
            w, v = np.linalg.eigh(block.real)
        else:
            w, v = np.linalg.eigh(block)
        k = min(n_levels, len(w))
        full = np.zeros((basis.dim, k), dtype=complex)
        full[idx, :] = v[:, :k]
        full = _fix_phases(full, ladder)
        purity = np.abs(np.sum(np.abs(full) ** 2 * signs[:, None], axis=0))
        if np.any(purity < 1 - tol.parity_purity):
            raise DegeneracyResolutionError(
                f"eigenstates of parity {s:+.0f} have <Pi> as low as {purity.min():.3e}"
            )
        sectors.append((w[:k], full))
    (ew, vw), (eo, vo) = sectors
    return Spectrum(params, basis, ew, vw, eo, vo)


def pair_spacing_sweep(
    alpha: float,
    delta_grid: Sequence[float],
    n_pairs: int,
    basis: Optional[FockBasis] = None,
    K: float = 1.0,
) -> np.ndarray:
    """``delta_n`` for each detuning; shape ``(len(delta_grid), n_pairs)``."""
    grid = np.asarray(delta_grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("detuning grid must be finite")
    if basis is None:
        worst = SystemParams(alpha=alpha, delta=max(grid.max(), 0.0), K=K)
        basis = default_basis(worst, min_dim=2 * n_pairs + 12)
    out = np.empty((len(grid), n_pairs))
    for i, d in enumerate(grid):
        spec = diagonalize(SystemParams(alpha=alpha, delta=d, K=K), basis, n_levels=n_pairs)
        out[i] = spec.pair_spacings[:n_pairs]
    return out


def displaced_block_hamiltonian(params: SystemParams, sign: int) -> np.ndarray:
    """Tridiagonal block of the Hamiltonian displaced by ``sign * alpha``.

    ``sign=+1`` is the frame ``D(alpha) H D(-alpha)`` whose eigenvectors,
    displaced back by ``-alpha``, sit in the left well; ``sign=-1`` gives the
    right well.  The constant ``-delta alpha²`` is not included.
    """
    m = params.blockable_m
    if m is None:
        raise NotBlockableError(
            f"delta={params.delta} is not an even multiple of K={params.K}"
        )
    K, al, d = params.K, params.alpha, params.delta
    n = np.arange(m + 1, dtype=float)
    block = np.diag((K * (n - 1) + 4 * K * al**2 - d) * n)
    off = -sign * (2 * K * n[:-1] - d) * al * np.sqrt(n[:-1] + 1)
    block += np.diag(off, 1) + np.diag(off, -1)
    return block


def analytic_degenerate_states(
    params: SystemParams, basis: Optional[FockBasis] = None
) -> DegenerateManifold:
    """The ``m+1`` degenerate pairs from the block route.

    Right-well states are ``D(alpha) v`` with ``v`` the eigenvectors of the
    ``sign=-1`` block; left-well states are their mirror images.
    """
    m = params.blockable_m
    if m is None:
        raise NotBlockableError(
            f"delta={params.delta} is not an even multiple of K={params.K}"
        )
    basis = basis or default_basis(params)
    block = displaced_block_hamiltonian(params, sign=-1)
    w, v = np.linalg.eigh(block)
    # Sign convention: the dominant displaced-Fock component is positive.
    v = v * np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(m + 1)])[None, :]
    right = _displacement_matrix(params.alpha, basis.dim)[:, : m + 1] @ v
    left = right * parity_signs(basis.dim)[:, None]
    # right/left overlap is O(exp(-2 alpha^2)); go through normalized parity
    # combinations so the pair states are the exact eigenvectors.
    even = right + left
    odd = right - left
    even /= np.linalg.norm(even, axis=0)
    odd /= np.linalg.norm(odd, axis=0)
    energies = w - params.delta * params.alpha**2
    return DegenerateManifold(
        m,
        ((even + odd) / math.sqrt(2)).astype(complex),
        ((even - odd) / math.sqrt(2)).astype(complex),
        energies,
        v,
        even.astype(complex),
        odd.astype(complex),
    )


def m1_mixing_angle(alpha: float) -> float:
    a2 = alpha**2
    return math.atan(2 * alpha / (2 * a2 - 1 + math.sqrt(4 * a2**2 + 1)))


def m1_gap(alpha: float, K: float = 1.0) -> float:
    return 2 * K * math.sqrt(1 + 4 * alpha**4)


def degenerate_manifold(spectrum: Spectrum, m: Optional[int] = None) -> DegenerateManifold:
    """Right/left-well combinations of the numerically found pairs."""
    m = spectrum.params.blockable_m if m is None else m
    if m is None:
        raise NotBlockableError("spectrum is not at a degenerate working point")
    plus = spectrum.even_states[:, : m + 1]
    minus = spectrum.odd_states[:, : m + 1]
    s = sign_x_observable(spectrum.basis).matrix
    right = (plus + minus) / math.sqrt(2)
    sgn = np.sign(np.real(np.einsum("ij,ik,kj->j", right.conj(), s, right)))
    minus = minus * sgn[None, :]
    right = (plus + minus) / math.sqrt(2)
    left = (plus - minus) / math.sqrt(2)
    return DegenerateManifold(
        m, right, left, spectrum.even_energies[: m + 1].copy(), np.empty((0, 0)), plus, minus
    )


def code_states(spectrum: Spectrum, tol=DEFAULT) -> CodeStates:
    """Computational states from the ground parity pair.

    ``ket0`` is oriented to the right half plane (positive ``<sign(x)>``).
    """
    delta0 = spectrum.pair_spacings[0]
    if abs(delta0) > tol.degeneracy:
        raise NonDegenerateGroundError(
            f"ground pair splitting {delta0:.3e} K exceeds {tol.degeneracy:.0e} K"
        )
    basis = spectrum.basis
    plus = spectrum.even_states[:, 0]
    minus = spectrum.odd_states[:, 0]
    s = sign_x_observable(basis)
    ket0 = (plus + minus) / math.sqrt(2)
    if s.expect(ket0).real < 0:
        minus = -minus
        ket0 = (plus + minus) / math.sqrt(2)
    ket1 = (plus - minus) / math.sqrt(2)
    nbar = float(number(basis).expect(ket0).real)
    a = np.diag(np.sqrt(np.arange(1, basis.dim)), 1)
    alpha_tilde = float(np.real(np.vdot(ket0, (a + a.T) @ ket0)) / 2)
    return CodeStates(ket0, ket1, plus, minus, nbar, alpha_tilde, basis)


def nbar_of(params: SystemParams, basis: Optional[FockBasis] = None) -> float:
    """Mean photon number of ``ket0`` (even ground state if not degenerate)."""
    spec = diagonalize(params, basis, n_levels=1)
    plus, minus = spec.even_states[:, 0], spec.odd_states[:, 0]
    n = np.arange(spec.basis.dim)
    return float(0.5 * (np.sum(n * np.abs(plus) ** 2) + np.sum(n * np.abs(minus) ** 2)))


def alpha_for_nbar(nbar: float, delta: float, K: float = 1.0) -> float:
    """Drive amplitude giving ``<a†a> = nbar`` in the code states at ``delta``.

    Raises ValueError when ``nbar`` is below what the detuning alone provides.
    """
    def f(al):
        p = SystemParams(alpha=al, delta=delta, K=K)
        basis = default_basis(SystemParams(alpha=math.sqrt(nbar) + 1, delta=delta, K=K))
        return nbar_of(p, basis) - nbar

    lo = 1e-6
    f_lo = f(lo)
    if f_lo > 0:
        raise ValueError(
            f"nbar={nbar} unreachable at delta={delta}: minimum is {f_lo + nbar:.3f}"
        )
    hi = max(math.sqrt(max(nbar - delta / (2 * K), 0.0)) + 1.0, 1.0)
    while f(hi) < 0:
        hi *= 1.5
    return scipy.optimize.brentq(f, lo, hi, xtol=1e-13, rtol=1e-13)
