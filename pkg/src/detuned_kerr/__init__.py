"""Detuned Kerr cat qubits: spectra, open-system dynamics, colored
dissipation, gates and cheap rate estimators.  Units: K = 1."""

__version__ = "0.1.0"

from .fock import FockBasis, QuantumOperator, SystemParams
from .spectral import alpha_for_nbar, code_states, diagonalize
from .dynamics import NoiseParams, BENCHMARK_NOISE, excursion_rate, steady_state

__all__ = [
    "FockBasis",
    "NoiseParams",
    "BENCHMARK_NOISE",
    "QuantumOperator",
    "SystemParams",
    "alpha_for_nbar",
    "code_states",
    "diagonalize",
    "excursion_rate",
    "steady_state",
]
