"""Truncated Fock-space operator algebra for a single bosonic mode.

Energies are measured in units of the Kerr strength K and the public builders
default to ``K = 1``.  The two-photon drive is parametrized by a real
amplitude ``alpha >= 0`` with ``eps2 = -K * alpha**2`` so that

    H = K (a†² - alpha²)(a² - alpha²) - delta a†a

holds exactly, including the constant ``K alpha⁴``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .tolerances import DEFAULT


class InvalidBasisError(ValueError):
    pass


class BasisMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class FockBasis:
    """Fock levels ``0 .. dim-1`` of one mode."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidBasisError(f"Fock basis needs dim >= 2, got {self.dim}")

    def enlarged(self, factor: float) -> "FockBasis":
        return FockBasis(int(math.ceil(self.dim * factor)))

    def vacuum(self) -> np.ndarray:
        return self.fock(0)

    def fock(self, n: int) -> np.ndarray:
        if not 0 <= n < self.dim:
            raise IndexError(f"Fock level {n} outside basis of dim {self.dim}")
        v = np.zeros(self.dim, dtype=complex)
        v[n] = 1.0
        return v


@dataclass(frozen=True, eq=False)
class QuantumOperator:
    """Dense operator tagged with the basis it acts on.

    Arithmetic between operators of different bases raises
    :class:`BasisMismatchError`; scalars mix freely.
    """

    basis: FockBasis
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise BasisMismatchError(
                f"matrix shape {m.shape} does not match basis dim {self.basis.dim}"
            )
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "QuantumOperator"):
        if other.basis != self.basis:
            raise BasisMismatchError(
                f"cannot combine operators on dims {self.basis.dim} and {other.basis.dim}"
            )

    def __matmul__(self, other):
        if isinstance(other, QuantumOperator):
            self._check(other)
            return QuantumOperator(self.basis, self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other):
        if isinstance(other, QuantumOperator):
            self._check(other)
            return QuantumOperator(self.basis, self.matrix + other.matrix)
        return QuantumOperator(self.basis, self.matrix + other * np.eye(self.basis.dim))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __mul__(self, scalar):
        return QuantumOperator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def dag(self) -> "QuantumOperator":
        return QuantumOperator(self.basis, self.matrix.conj().T)

    def expect(self, state: np.ndarray) -> complex:
        """Expectation value in a ket (1-d) or density matrix (2-d)."""
        state = np.asarray(state)
        if state.ndim == 1:
            return np.vdot(state, self.matrix @ state)
        return np.trace(self.matrix @ state)

    def is_hermitian(self, rtol: float = DEFAULT.hermitian_rel) -> bool:
        norm = np.linalg.norm(self.matrix)
        if norm == 0:
            return True
        return np.linalg.norm(self.matrix - self.matrix.conj().T) / norm < rtol


@dataclass(frozen=True)
class SystemParams:
    """Drive amplitude ``alpha``, detuning ``delta`` and Kerr ``K``.

    Passing ``m`` pins the detuning to the degenerate working point
    ``delta = 2 m K``.
    """

    alpha: float
    delta: float = 0.0
    K: float = 1.0
    m: Optional[int] = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.m is not None:
            if int(self.m) != self.m or self.m < 0:
                raise ValueError(f"m must be a nonnegative integer, got {self.m}")
            if self.delta == 0.0 and self.m != 0:
                object.__setattr__(self, "delta", 2.0 * self.m * self.K)
            elif self.delta != 2.0 * self.m * self.K:
                raise ValueError(
                    f"delta={self.delta} inconsistent with m={self.m} (need 2mK)"
                )

    @classmethod
    def at_m(cls, alpha: float, m: int, K: float = 1.0) -> "SystemParams":
        return cls(alpha=alpha, delta=2.0 * m * K, K=K, m=m)

    @property
    def eps2(self) -> float:
        return -self.K * self.alpha**2

    @property
    def nbar_estimate(self) -> float:
        return self.alpha**2 + self.delta / (2.0 * self.K)

    @property
    def blockable_m(self) -> Optional[int]:
        """``m`` if ``delta`` is an even multiple of K, else None."""
        if self.m is not None:
            return self.m
        ratio = self.delta / (2.0 * self.K)
        if ratio >= 0 and abs(ratio - round(ratio)) < 1e-12:
            return int(round(ratio))
        return None


def default_dim(params: SystemParams) -> int:
    nbar = max(params.nbar_estimate, 0.0)
    return int(math.ceil(nbar + 10.0 * math.sqrt(nbar) + 10.0))


def default_basis(params: SystemParams, min_dim: int = 2) -> FockBasis:
    return FockBasis(max(default_dim(params), min_dim))


def annihilation(basis: FockBasis) -> QuantumOperator:
    n = np.arange(1, basis.dim)
    return QuantumOperator(basis, np.diag(np.sqrt(n).astype(complex), k=1))


def creation(basis: FockBasis) -> QuantumOperator:
    return annihilation(basis).dag()


def number(basis: FockBasis) -> QuantumOperator:
    return QuantumOperator(basis, np.diag(np.arange(basis.dim, dtype=complex)))


def parity(basis: FockBasis) -> QuantumOperator:
    """exp(i pi a†a) as a diagonal of ±1."""
    return QuantumOperator(basis, np.diag((-1.0) ** np.arange(basis.dim)).astype(complex))


def parity_signs(dim: int) -> np.ndarray:
    return (-1.0) ** np.arange(dim)


def _displacement_matrix(beta: complex, dim: int) -> np.ndarray:
    # Exponentiate in a padded space and crop so the low-Fock corner is exact
    # to machine precision; the edge of a hard truncation is not unitary anyway.
    r2 = abs(beta) ** 2
    pad = int(math.ceil(r2 + 10.0 * math.sqrt(r2) + 20.0))
    big = dim + pad
    a = np.diag(np.sqrt(np.arange(1, big)).astype(complex), k=1)
    gen = beta * a.conj().T - np.conj(beta) * a
    return scipy.linalg.expm(gen)[:dim, :dim]


def displacement(beta: complex, basis: FockBasis) -> QuantumOperator:
    return QuantumOperator(basis, _displacement_matrix(beta, basis.dim))


def coherent(beta: complex, basis: FockBasis) -> np.ndarray:
    """Closed-form coherent amplitudes, renormalized after truncation."""
    n = np.arange(basis.dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if beta == 0:
        return basis.vacuum()
    amps = np.exp(-abs(beta) ** 2 / 2 + n * np.log(complex(beta)) - 0.5 * log_fact)
    return amps / np.linalg.norm(amps)


def displaced_fock(alpha: float, n: int, basis: FockBasis) -> np.ndarray:
    """D(alpha)|n>, normalized in the truncated space."""
    if not 0 <= n < basis.dim:
        raise IndexError(f"Fock level {n} outside basis of dim {basis.dim}")
    v = _displacement_matrix(alpha, basis.dim)[:, n]
    return v / np.linalg.norm(v)


def build_hamiltonian(params: SystemParams, basis: FockBasis) -> QuantumOperator:
    """Detuned two-photon-driven Kerr Hamiltonian.

    ``K a†²a² + eps2 a†² + eps2* a² - delta a†a + K alpha⁴`` with
    ``eps2 = -K alpha²``.
    """
    K = params.K
    n = np.arange(basis.dim, dtype=float)
    a2 = annihilation(basis).matrix @ annihilation(basis).matrix
    eps2 = params.eps2
    h = np.diag(K * n * (n - 1) - params.delta * n + K * params.alpha**4).astype(complex)
    h += eps2 * a2.conj().T + np.conj(eps2) * a2
    return QuantumOperator(basis, h)


def factored_hamiltonian(params: SystemParams, basis: FockBasis) -> QuantumOperator:
    """Same operator assembled from the product form; used as a cross-check."""
    a = annihilation(basis)
    a2 = a @ a
    al2 = params.alpha**2
    return params.K * ((a2.dag() - al2) @ (a2 - al2)) - params.delta * number(basis)


def sign_x_observable(basis: FockBasis) -> QuantumOperator:
    """sign(a + a†) via the eigendecomposition of the quadrature.

    Eigenvalues that vanish to rounding (odd ``dim`` has one exact zero) map
    to 0, so the result stays odd under parity.
    """
    x = annihilation(basis).matrix
    x = (x + x.conj().T).real
    w, v = np.linalg.eigh(x)
    s = np.sign(w)
    s[np.abs(w) < 1e-10 * max(1.0, np.abs(w).max())] = 0.0
    return QuantumOperator(basis, (v * s) @ v.T)


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


def fidelity(state: np.ndarray, target: np.ndarray) -> float:
    """<target| rho |target> for a ket or density-matrix ``state``."""
    state = np.asarray(state)
    if state.ndim == 1:
        return float(abs(np.vdot(target, state)) ** 2)
    return float(np.real(np.vdot(target, state @ target)))


def check_density_matrix(rho: np.ndarray, tol=DEFAULT) -> None:
    """Raise ValueError unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    norm = np.linalg.norm(rho)
    if np.linalg.norm(rho - rho.conj().T) > tol.hermitian_rel * max(norm, 1.0) * 1e3:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.trace:
        raise ValueError(f"density matrix trace {tr!r} differs from 1")
    wmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if wmin < tol.psd_floor:
        raise ValueError(f"density matrix has negative eigenvalue {wmin:.3e}")
