"""Cheap predictors of excursion and leakage rates.

``gamma_formula`` is the closed-form rate for the resonant Kerr cat built from
average overlaps with ``D(alpha)|1>`` and the pair spacings.  The
perturbative estimator expands the first-order response of ``|0><0|`` to the
ambient noise in the Hamiltonian eigenbasis: populations grow linearly, and
each pair's inter-parity coherence rotates at its spacing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import DecayFit, NoiseParams, fit_decay
from .fock import (
    FockBasis,
    SystemParams,
    annihilation,
    default_basis,
    displaced_fock,
    number,
    sign_x_observable,
)
from .spectral import Spectrum, code_states, diagonalize

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 20
RESONANT_SPACING = 1e-10


@dataclass(frozen=True)
class OverlapWeights:
    lambda_n: np.ndarray
    delta_n: np.ndarray
    kappa_conf: float


def overlap_weights(spectrum: Spectrum, kappa_conf: float) -> OverlapWeights:
    """``lambda_n = sum_± |<alpha,1|phi_n^±>|² / 2`` for every pair."""
    psi = displaced_fock(spectrum.params.alpha, 1, spectrum.basis)
    n = spectrum.n_pairs
    lam = 0.5 * (
        np.abs(spectrum.even_states[:, :n].conj().T @ psi) ** 2
        + np.abs(spectrum.odd_states[:, :n].conj().T @ psi) ** 2
    )
    return OverlapWeights(lam, spectrum.pair_spacings, kappa_conf)


def _one_minus_sinc(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    out[small] = x[small] ** 2 / 6.0
    out[~small] = 1.0 - np.sin(x[~small]) / x[~small]
    return out


def gamma_formula(
    spectrum: Spectrum,
    noise: NoiseParams,
    kappa_conf: Optional[float] = None,
) -> float:
    """Closed-form excursion rate of the resonant Kerr cat.

    ``kappa1 a² e^{-4a²} + kappa_l e^{-2a²} + kappa_l sum_{n>0} lambda_n
    [1 - sinc(delta_n/kappa_conf)]`` with ``a = alpha`` and ``kappa_l`` the
    leakage rate.  ``kappa_conf`` defaults to ``kappa1``.
    """
    alpha = spectrum.params.alpha
    kc = noise.kappa1 if kappa_conf is None else kappa_conf
    kl = noise.leakage_rate(alpha)
    a2 = alpha**2
    rate = noise.kappa1 * a2 * math.exp(-4 * a2) + kl * math.exp(-2 * a2)
    if kl == 0:
        return rate
    if kc <= 0:
        raise ValueError("kappa_conf must be positive")
    w = overlap_weights(spectrum, kc)
    return rate + kl * float(np.sum(w.lambda_n[1:] * _one_minus_sinc(w.delta_n[1:] / kc)))


def _dissipator(rho: np.ndarray, op: np.ndarray) -> np.ndarray:
    ld = op.conj().T
    ldl = ld @ op
    return op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)


@dataclass(frozen=True, eq=False)
class PerturbativeState:
    """First-order leakage response of ``|0>_m``.

    ``kappa_pairs[n]`` is the 2x2 table ``<phi_n^s| D_l(|0><0|) |phi_n^r>``
    over ``s, r in (+, -)``; ``energies[n]`` the pair energies.
    """

    kappa_l: float
    kappa_pairs: np.ndarray
    energies: np.ndarray
    n_cutoff: int
    sign_pairs: np.ndarray = field(repr=False)
    sign_ket0: float = 1.0
    max_neglected: float = 0.0

    def tau(self, t: float) -> np.ndarray:
        """2x2 coefficient tables of the leaked state at time ``t``, pairs 1..N."""
        out = np.zeros((self.n_cutoff + 1, 2, 2), dtype=complex)
        for n in range(1, self.n_cutoff + 1):
            for s in range(2):
                for r in range(2):
                    k = self.kappa_pairs[n, s, r]
                    w = self.energies[n, s] - self.energies[n, r]
                    if s == r or abs(w) < RESONANT_SPACING:
                        out[n, s, r] = k * t
                    else:
                        out[n, s, r] = 1j * k * (np.exp(-1j * w * t) - 1.0) / w
        return out

    def pair_populations(self, t: float) -> np.ndarray:
        """Population per pair; pair 0 holds ``1 - kappa_l t``."""
        tau = self.tau(t)
        pops = np.real(tau[:, 0, 0] + tau[:, 1, 1])
        pops[0] = 1.0 - self.kappa_l * t
        return pops

    def sign_expectation(self, t: float) -> float:
        tau = self.tau(t)
        # tr(S rho) restricted to within-pair blocks; S is parity odd so only
        # the (+,-) and (-,+) entries contribute.
        total = self.sign_ket0 * (1.0 - self.kappa_l * t)
        total += np.real(np.sum(self.sign_pairs[1:] * np.swapaxes(tau[1:], 1, 2)))
        return float(total)


def perturbative_leakage(
    params: SystemParams,
    noise: NoiseParams,
    n_cutoff: int = DEFAULT_CUTOFF,
    basis: Optional[FockBasis] = None,
    spectrum: Optional[Spectrum] = None,
) -> PerturbativeState:
    """Coefficients of the first-order leaked state.

    ``D_l = kappa_- D[a] + kappa_+ D[a†] + kappa_phi D[a†a] + kappa_l``,
    applied to ``|0><0|`` in Fock space and projected onto the eigenpairs.
    """
    if spectrum is None:
        basis = basis or default_basis(params, min_dim=2 * n_cutoff + 12)
        spectrum = diagonalize(params, basis, n_levels=n_cutoff + 1)
    if n_cutoff + 1 > spectrum.n_pairs:
        raise ValueError(f"n_cutoff={n_cutoff} needs {n_cutoff + 1} pairs, spectrum has {spectrum.n_pairs}")
    b = spectrum.basis
    code = code_states(spectrum)
    rho0 = np.outer(code.ket0, code.ket0.conj())
    a = annihilation(b).matrix
    n_op = number(b).matrix
    d_rho = (
        noise.kappa_minus * _dissipator(rho0, a)
        + noise.kappa_plus * _dissipator(rho0, a.conj().T)
        + noise.kappa_phi * _dissipator(rho0, n_op)
    )
    kappa_l = float(-np.real(np.vdot(code.ket0, d_rho @ code.ket0)))
    d_rho = d_rho + kappa_l * rho0

    s_op = sign_x_observable(b).matrix
    n_pairs = n_cutoff + 1
    kp = np.zeros((n_pairs, 2, 2), dtype=complex)
    sp = np.zeros((n_pairs, 2, 2), dtype=complex)
    en = np.zeros((n_pairs, 2))
    phis = []
    for n in range(n_pairs):
        e_p, v_p = spectrum.level(n, +1)
        e_m, v_m = spectrum.level(n, -1)
        pair = np.column_stack([v_p, v_m])
        phis.append(pair)
        kp[n] = pair.conj().T @ d_rho @ pair
        sp[n] = pair.conj().T @ s_op @ pair
        en[n] = (e_p, e_m)
    # Largest cross-pair coefficient, dropped by the first-order expansion.
    worst = 0.0
    for n in range(1, min(n_pairs, 6)):
        for p in range(1, min(n_pairs, 6)):
            if n != p:
                worst = max(worst, float(np.abs(phis[n].conj().T @ d_rho @ phis[p]).max()))
    if worst:
        log.debug("largest neglected cross-pair coefficient %.3e", worst)
    s0 = float(np.real(np.vdot(code.ket0, s_op @ code.ket0)))
    return PerturbativeState(kappa_l, kp, en, n_cutoff, sp, s0, worst)


def perturbative_bitflip_rate(
    state: PerturbativeState,
    kappa_conf: float,
    n_samples: int = 200,
) -> DecayFit:
    """Fit ``<S>`` of the first-order state over ``(0, 1/kappa_conf]``."""
    if kappa_conf <= 0:
        raise ValueError("kappa_conf must be positive")
    times = np.linspace(0.0, 1.0 / kappa_conf, n_samples + 1)[1:]
    values = np.array([state.sign_expectation(t) for t in times])
    return fit_decay(times, values)
