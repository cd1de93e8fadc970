import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detuned_kerr.fock import FockBasis, coherent, displacement, parity
from detuned_kerr.wigner import (
    TruncationSupportWarning,
    WignerGrid,
    diverging_color,
    wigner,
    wigner_points,
    write_csv,
    write_svg,
)

B = FockBasis(40)


def dm(ket):
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def displaced_parity(rho, beta):
    # oracle: (2/pi) tr[D(-beta) rho D(beta) P] on a padded basis
    d = rho.shape[0]
    big = FockBasis(d + 60)
    r = np.zeros((big.dim, big.dim), dtype=complex)
    r[:d, :d] = rho
    dm_ = displacement(-beta, big).matrix
    shifted = dm_ @ r @ dm_.conj().T
    return 2 / math.pi * np.real(np.trace(shifted @ parity(big).matrix))


def test_vacuum_peak():
    assert wigner_points(dm(B.vacuum()), np.array(0.0)).real == pytest.approx(2 / math.pi)


def test_odd_cat_negative_origin():
    cat = coherent(2.0, B) - coherent(-2.0, B)
    assert wigner_points(dm(cat), np.array(0.0)).real == pytest.approx(-2 / math.pi, abs=1e-12)


def test_coherent_peak_location():
    g = wigner(dm(coherent(1.0 + 0.5j, B)), resolution=81)
    i, j = np.unravel_index(np.argmax(g.values), g.values.shape)
    assert g.x[j] == pytest.approx(1.0, abs=g.dx)
    assert g.p[i] == pytest.approx(0.5, abs=g.dp)
    assert g.value_at(1.0, 0.5) == pytest.approx(2 / math.pi, abs=1e-10)


def test_matches_displaced_parity_oracle():
    rho = dm(coherent(1.2, B) + 1j * coherent(-0.8j, B))
    betas = np.array([0.3 - 0.2j, -1.1 + 0.4j, 0.9j])
    got = wigner_points(rho, betas).real
    ref = [displaced_parity(rho, b) for b in betas]
    np.testing.assert_allclose(got, ref, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 12))
def test_origin_is_scaled_parity_and_bounded(seed, d):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    par = np.real(np.trace(rho @ parity(FockBasis(d)).matrix))
    assert wigner_points(rho, np.array(0.0)).real == pytest.approx(2 / math.pi * par, abs=1e-12)
    vals = wigner_points(rho, rng.normal(size=20) + 1j * rng.normal(size=20))
    assert np.all(np.abs(vals.real) <= 2 / math.pi + 1e-10)
    assert np.abs(vals.imag).max() < 1e-10


def test_grid_integral_and_layout():
    g = wigner(dm(coherent(0.5, B) + coherent(-0.5, B)), resolution=121)
    assert isinstance(g, WignerGrid)
    assert g.values.shape == (121, 121)
    assert g.integral() == pytest.approx(1.0, abs=1e-4)


def test_non_hermitian_input_raises():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 1] = 1.0
    with pytest.raises(ValueError):
        wigner(rho, x_range=(-1, 1), p_range=(-1, 1), resolution=11)


def test_truncation_warning():
    with pytest.warns(TruncationSupportWarning):
        wigner(dm(FockBasis(6).vacuum()), x_range=(-5, 5), p_range=(-5, 5), resolution=11)


def test_csv_and_svg(tmp_path):
    g = wigner(dm(coherent(1.0, B)), resolution=21)
    write_csv(g, tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "x,p,w" and len(lines) == 1 + 21 * 21
    write_svg(g, tmp_path / "w.svg", title="coherent")
    svg = (tmp_path / "w.svg").read_text()
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg.count("<rect") >= 21 * 21


def test_diverging_colors():
    def rgb(c):
        return np.array([int(c[k : k + 2], 16) for k in (1, 3, 5)])

    mid = rgb(diverging_color(0.0, 1.0))
    assert np.all(mid > 230) and np.ptp(mid) == 0
    hi, lo = rgb(diverging_color(1.0, 1.0)), rgb(diverging_color(-1.0, 1.0))
    # symmetric map: red for positive, blue for negative
    assert hi[0] > hi[2] and lo[2] > lo[0]
