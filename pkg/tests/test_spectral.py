import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detuned_kerr.fock import FockBasis, SystemParams, build_hamiltonian, coherent, displacement, fidelity, number, sign_x_observable
from detuned_kerr.spectral import (
    NonDegenerateGroundError,
    NotBlockableError,
    alpha_for_nbar,
    analytic_degenerate_states,
    code_states,
    degenerate_manifold,
    diagonalize,
    displaced_block_hamiltonian,
    m1_gap,
    m1_mixing_angle,
    nbar_of,
    pair_spacing_sweep,
)


def test_gap_close_to_four_alpha_squared():
    spec = diagonalize(SystemParams(2.0), n_levels=3)
    gap = spec.even_energies[1] - spec.even_energies[0]
    assert gap == pytest.approx(16.0, rel=0.25)


def test_first_four_pairs_degenerate_at_m3():
    d = diagonalize(SystemParams.at_m(2.0, 3), n_levels=6).pair_spacings
    assert np.all(np.abs(d[:4]) < 1e-10)
    assert abs(d[4]) > 1e-2


def test_pure_kerr_spectrum():
    spec = diagonalize(SystemParams(0.0), FockBasis(12), n_levels=5)
    n_even, n_odd = np.arange(0, 10, 2), np.arange(1, 10, 2)
    np.testing.assert_allclose(spec.even_energies, n_even * (n_even - 1), atol=1e-12)
    np.testing.assert_allclose(spec.odd_energies, n_odd * (n_odd - 1), atol=1e-12)


def test_spectrum_invariants():
    p = SystemParams(1.7, 3.1)
    spec = diagonalize(p, n_levels=8)
    assert np.all(np.diff(spec.even_energies) >= 0)
    assert np.all(np.diff(spec.odd_energies) >= 0)
    assert spec.gauge_offset == spec.even_energies[0]
    assert len(spec.pair_spacings) == min(len(spec.even_energies), len(spec.odd_energies))
    # every eigenstate has definite parity
    par = np.where(np.arange(spec.basis.dim) % 2 == 0, 1.0, -1.0)
    for states, sign in ((spec.even_states, 1), (spec.odd_states, -1)):
        p_exp = np.einsum("i,ij->j", par, np.abs(states) ** 2)
        assert np.all(sign * p_exp > 1 - 1e-8)


def test_spectrum_matches_dense_diagonalization():
    p = SystemParams(1.5, 2.7)
    b = FockBasis(50)
    spec = diagonalize(p, b, n_levels=5)
    w = np.linalg.eigvalsh(build_hamiltonian(p, b).matrix)
    both = np.sort(np.concatenate([spec.even_energies, spec.odd_energies]))
    np.testing.assert_allclose(both[:6], w[:6], atol=1e-9)


def test_pair_spacing_sweep_structure():
    grid = [2.0, 3.0, 4.0]
    d = pair_spacing_sweep(2.0, grid, 3)
    assert np.all(np.abs(d[0, :2]) < 1e-10)
    assert abs(d[1, 1]) > abs(d[0, 1])
    big = pair_spacing_sweep(3.0, [0.0], 2)
    small = pair_spacing_sweep(math.sqrt(2), [0.0], 2)
    assert abs(big[0, 1]) < abs(small[0, 1])
    with pytest.raises(ValueError):
        pair_spacing_sweep(2.0, [np.nan], 2)


# ---------------------------------------------------------- block route


def test_block_m0_and_m1_entries():
    np.testing.assert_allclose(displaced_block_hamiltonian(SystemParams.at_m(2.0, 0), 1), [[0.0]])
    blk = displaced_block_hamiltonian(SystemParams.at_m(2.0, 1), 1)
    assert blk[0, 0] == 0.0 and blk[1, 1] == pytest.approx(14.0)
    assert abs(blk[0, 1]) == pytest.approx(4.0) and blk[0, 1] == blk[1, 0]


@pytest.mark.parametrize("sign", [1, -1])
def test_block_matches_displaced_full_hamiltonian(sign):
    # project D(-s alpha)† H D(-s alpha) onto the first m+1 Fock states
    p = SystemParams.at_m(1.3, 2)
    b = FockBasis(80)
    d = displacement(-sign * p.alpha, b).matrix
    h = build_hamiltonian(p, b).matrix
    proj = (d.conj().T @ h @ d)[:3, :3] + p.delta * p.alpha**2 * np.eye(3)
    np.testing.assert_allclose(proj, displaced_block_hamiltonian(p, sign), atol=1e-8)


def test_block_eigenvalues_match_full_spectrum():
    p = SystemParams.at_m(2.0, 1)
    w = np.linalg.eigvalsh(displaced_block_hamiltonian(p, 1))
    spec = diagonalize(p, n_levels=3)
    np.testing.assert_allclose(w - w[0], spec.even_energies[:2] - spec.gauge_offset, atol=1e-9)


def test_m1_closed_forms():
    assert m1_mixing_angle(2.0) == pytest.approx(math.atan(4 / (7 + math.sqrt(65))), abs=1e-12)
    assert m1_mixing_angle(2.0) == pytest.approx(0.2596, abs=1e-4)
    assert m1_gap(2.0) == pytest.approx(16.1245, abs=1e-4)


def test_m0_states_are_coherent():
    b = FockBasis(50)
    man = analytic_degenerate_states(SystemParams.at_m(2.0, 0), b)
    # the well states come from normalized parity combinations, so they
    # differ from |±alpha> at the e^{-4 alpha²} level
    assert fidelity(man.right_states[:, 0], coherent(2.0, b)) > 1 - 1e-6
    assert fidelity(man.left_states[:, 0], coherent(-2.0, b)) > 1 - 1e-6


@settings(max_examples=12, deadline=None)
@given(st.floats(1.0, 2.5), st.integers(0, 3))
def test_analytic_manifold_matches_numerics(alpha, m):
    p = SystemParams.at_m(alpha, m)
    b = FockBasis(int(alpha**2 + m + 10 * math.sqrt(alpha**2 + m) + 20))
    man = analytic_degenerate_states(p, b)
    spec = diagonalize(p, b, n_levels=m + 1)
    np.testing.assert_allclose(man.energies, spec.even_energies[: m + 1], atol=1e-9)
    for n in range(m + 1):
        assert fidelity(man.even_states[:, n], spec.even_states[:, n]) > 1 - 1e-8
        assert fidelity(man.odd_states[:, n], spec.odd_states[:, n]) > 1 - 1e-8
    num = degenerate_manifold(spec)
    s = sign_x_observable(b)
    for n in range(m + 1):
        assert s.expect(num.right_states[:, n]).real > 0


def test_block_route_needs_even_multiple():
    with pytest.raises(NotBlockableError):
        analytic_degenerate_states(SystemParams(2.0, 3.0))


# ---------------------------------------------------------- code states


def test_code_states_resonant():
    b = FockBasis(40)
    code = code_states(diagonalize(SystemParams(2.0), b, n_levels=2))
    assert fidelity(code.ket0, coherent(2.0, b)) > 1 - 5 * math.exp(-8)
    assert abs(np.vdot(code.ket0, code.ket1)) < 1e-14
    assert sign_x_observable(b).expect(code.ket0).real > 0


def test_code_states_need_degenerate_ground():
    with pytest.raises(NonDegenerateGroundError):
        code_states(diagonalize(SystemParams(0.5, 1.0), n_levels=2))


def test_nbar_estimate_at_m3():
    p = SystemParams.at_m(2.0, 3)
    assert nbar_of(p) == pytest.approx(7.0, rel=0.15)


@pytest.mark.parametrize("nbar,delta", [(4.0, 0.0), (6.0, 4.0), (8.0, 8.0)])
def test_alpha_for_nbar_roundtrip(nbar, delta):
    al = alpha_for_nbar(nbar, delta)
    p = SystemParams(al, delta)
    code = code_states(diagonalize(p, n_levels=2))
    assert code.nbar == pytest.approx(nbar, abs=1e-9)
    assert number(code.basis).expect(code.ket0).real == pytest.approx(nbar, abs=1e-9)


def test_alpha_for_nbar_unreachable():
    with pytest.raises(ValueError):
        alpha_for_nbar(0.5, 10.0)
