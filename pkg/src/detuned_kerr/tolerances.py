"""Numerical tolerances shared across the package.

All values are in units of K (energies, rates) unless noted.  Override by
building a new :class:`Tolerances` with ``dataclasses.replace`` and passing it
where accepted, or by editing ``DEFAULT`` before running a pipeline.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian_rel: float = 1e-12
    trace: float = 1e-9
    psd_floor: float = -1e-9
    parity_purity: float = 1e-8
    degeneracy: float = 1e-8
    trace_drift: float = 1e-7
    trajectory_psd_floor: float = -1e-7
    steady_residual: float = 1e-10
    kernel_rel: float = 1e-12
    convergence_rel: float = 1e-6
    convergence_scale: float = 1.25


DEFAULT = Tolerances()
