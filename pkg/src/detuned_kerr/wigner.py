"""Wigner functions on a rectangular phase-space grid, with CSV and SVG export.

Grid coordinates are ``x = Re(beta)``, ``p = Im(beta)``, so a coherent state
``|alpha>`` peaks at ``x = alpha``.  Normalization is over ``dx dp`` in these
coordinates, which puts the vacuum peak at ``2/pi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import eval_genlaguerre, gammaln


class TruncationSupportWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # values[i, j] is W(x[j] + i p[i])

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 0.0

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0]) if len(self.p) > 1 else 0.0

    def integral(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def value_at(self, x: float, p: float) -> float:
        i = int(np.argmin(np.abs(self.p - p)))
        j = int(np.argmin(np.abs(self.x - x)))
        return float(self.values[i, j])


def _as_dm(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise ValueError(f"expected a ket or square density matrix, got shape {state.shape}")
    return state


def wigner_points(rho: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``(2/pi) tr[D(beta)† rho D(beta) Pi]`` at the complex points ``beta``.

    Laguerre expansion of the displaced parity; returns the complex sum so
    callers can check the imaginary residue.
    """
    rho = _as_dm(rho)
    beta = np.asarray(beta, dtype=complex)
    d = rho.shape[0]
    r2 = 4.0 * np.abs(beta) ** 2
    total = np.zeros(beta.shape, dtype=complex)
    two_b = 2.0 * beta
    for m in range(d):
        sign = -1.0 if m % 2 else 1.0
        if rho[m, m] != 0:
            total += sign * rho[m, m] * eval_genlaguerre(m, 0, r2)
        power = np.ones_like(two_b)
        for n in range(m + 1, d):
            power = power * two_b
            if rho[n, m] == 0 and rho[m, n] == 0:
                continue
            k = n - m
            w = sign * np.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1))) * eval_genlaguerre(m, k, r2)
            # rho[n, m] pairs with conj(beta)^k, rho[m, n] with beta^k.
            total += w * (rho[n, m] * np.conj(power) + rho[m, n] * power)
    return (2.0 / math.pi) * np.exp(-0.5 * r2) * total


def wigner(
    rho: np.ndarray,
    x_range: tuple[float, float] = (-4.0, 4.0),
    p_range: tuple[float, float] = (-4.0, 4.0),
    resolution: int = 101,
    imag_tol: float = 1e-10,
) -> WignerGrid:
    rho = _as_dm(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > 1e-10 * max(float(np.abs(rho).max()), 1e-300):
        raise ValueError(f"state is not Hermitian (max |rho - rho†| = {herm:.2e})")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    x = np.linspace(*x_range, resolution)
    p = np.linspace(*p_range, resolution)
    radius2 = max(abs(x_range[0]), abs(x_range[1])) ** 2 + max(abs(p_range[0]), abs(p_range[1])) ** 2
    if radius2 > rho.shape[0]:
        warnings.warn(
            f"grid radius² {radius2:.1f} exceeds the Fock cutoff {rho.shape[0]}; outer values are truncation artefacts",
            TruncationSupportWarning,
            stacklevel=2,
        )
    beta = x[None, :] + 1j * p[:, None]
    vals = wigner_points(rho, beta)
    resid = float(np.abs(vals.imag).max())
    if resid > imag_tol:
        raise ValueError(f"imaginary residue {resid:.2e} for a Hermitian state")
    return WignerGrid(x, p, vals.real)


def write_csv(grid: WignerGrid, path) -> Path:
    path = Path(path)
    xx, pp = np.meshgrid(grid.x, grid.p)
    data = np.column_stack([xx.ravel(), pp.ravel(), grid.values.ravel()])
    np.savetxt(path, data, fmt="%.12e", delimiter=",", header="x,p,w", comments="")
    return path


# Blue-white-red, symmetric about zero.
_STOPS = np.array([[0.019, 0.188, 0.380], [0.263, 0.576, 0.765], [0.969, 0.969, 0.969], [0.839, 0.376, 0.302], [0.404, 0.0, 0.122]])


def diverging_color(v: float, vmax: float) -> str:
    s = 0.5 if vmax <= 0 else 0.5 + 0.5 * max(-1.0, min(1.0, v / vmax))
    pos = s * (len(_STOPS) - 1)
    i = min(int(pos), len(_STOPS) - 2)
    f = pos - i
    rgb = (1 - f) * _STOPS[i] + f * _STOPS[i + 1]
    return "#%02x%02x%02x" % tuple(int(round(255 * c)) for c in rgb)


def write_svg(grid: WignerGrid, path, cell: int = 4, title: Optional[str] = None) -> Path:
    path = Path(path)
    ny, nx = grid.values.shape
    vmax = float(np.abs(grid.values).max())
    w, h = nx * cell, ny * cell
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h + 20}" viewBox="0 0 {w} {h + 20}">']
    label = title or "W(x + ip)"
    out.append(
        f'<text x="2" y="14" font-size="12" font-family="sans-serif">{label}; x = Re beta, p = Im beta; '
        f"|W| max {vmax:.3g}</text>"
    )
    for i in range(ny):
        # p increases upwards
        y = 20 + (ny - 1 - i) * cell
        for j in range(nx):
            c = diverging_color(grid.values[i, j], vmax)
            out.append(f'<rect x="{j * cell}" y="{y}" width="{cell}" height="{cell}" fill="{c}"/>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
