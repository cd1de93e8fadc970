"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (also collected into the terminal
summary) before asserting.
"""

import math
import time

import numpy as np
import pytest

from detuned_kerr.dynamics import (
    BENCHMARK_NOISE,
    NoiseParams,
    evolve,
    excursion_rate,
    mean_excitation_degenerate,
    mode_lindbladian,
    pair_populations,
    setup_mode,
    steady_state_populations,
)
from detuned_kerr.estimators import perturbative_bitflip_rate, perturbative_leakage
from detuned_kerr.filters import colored_bitflip_rate, colored_leakage, uncolored_leakage
from detuned_kerr.fock import FockBasis, SystemParams, annihilation, coherent, fidelity, parity
from detuned_kerr.gates import cnot_generator, gaussian_pulse, rotated_hamiltonian, zeno_z_gate
from detuned_kerr.spectral import (
    alpha_for_nbar,
    analytic_degenerate_states,
    code_states,
    diagonalize,
    displaced_block_hamiltonian,
    m1_gap,
)
from detuned_kerr.wigner import wigner_points

pytestmark = pytest.mark.acceptance

NBARS = [4, 5, 6, 7, 8, 9, 10]


def _working_points(nbar, min_alpha2=0.0):
    """(m, params) for every reachable Delta = 2mK at this nbar."""
    out = []
    for m in range(0, int(nbar) + 1):
        try:
            al = alpha_for_nbar(nbar, 2 * m)
        except ValueError:
            continue
        if al**2 < min_alpha2:
            continue
        out.append((m, SystemParams.at_m(al, m)))
    return out


def _envelope_slope(nbars, rates):
    return -float(np.polyfit(nbars, np.log(rates), 1)[0])


def test_criterion_1_degeneracy_structure(report):
    t0 = time.perf_counter()
    worst_in, worst_out = 0.0, np.inf
    for m in range(1, 6):
        spec = diagonalize(SystemParams.at_m(2.0, m), n_levels=m + 3)
        d = spec.pair_spacings
        worst_in = max(worst_in, float(np.abs(d[: m + 1]).max()))
        worst_out = min(worst_out, float(abs(d[m + 1])))
    dt = time.perf_counter() - t0
    ok = worst_in < 1e-8 and worst_out > 1e-3 and dt < 1.0
    report("CRITERION 1 degeneracy", ok, f"max |delta_n<=m| {worst_in:.1e}, min |delta_m+1| {worst_out:.2e}, {dt:.2f}s")
    assert ok


def test_criterion_2_m1_closed_forms(report):
    t0 = time.perf_counter()
    gap_err, infid = 0.0, 0.0
    for al in (1.0, 2.0, 3.0):
        p = SystemParams.at_m(al, 1)
        w = np.linalg.eigvalsh(displaced_block_hamiltonian(p, -1))
        gap_err = max(gap_err, abs((w[1] - w[0]) / m1_gap(al) - 1.0))
        basis = FockBasis(60)
        man = analytic_degenerate_states(p, basis)
        spec = diagonalize(p, basis, n_levels=3)
        for n in range(2):
            infid = max(infid, 1 - fidelity(man.even_states[:, n], spec.even_states[:, n]))
            infid = max(infid, 1 - fidelity(man.odd_states[:, n], spec.odd_states[:, n]))
    dt = time.perf_counter() - t0
    ok = gap_err < 1e-10 and infid < 1e-8 and dt < 1.0
    report("CRITERION 2 m=1 closed forms", ok, f"gap rel err {gap_err:.1e}, state infidelity {infid:.1e}, {dt:.2f}s")
    assert ok


def test_criterion_3_excursion_suppression(report):
    envelope, at8 = [], None
    for nb in NBARS:
        rates = {m: excursion_rate(p, BENCHMARK_NOISE).gamma for m, p in _working_points(nb)}
        envelope.append(min(rates.values()))
        if nb == 8:
            at8 = rates
    gamma = _envelope_slope(NBARS, envelope)
    ratio = at8[0] / min(at8.values())
    ok = ratio >= 100 and abs(gamma - 0.65) <= 0.15
    report("CRITERION 3 excursion suppression", ok, f"Gamma(0)/Gamma(opt) at nbar=8 = {ratio:.0f}, gamma = {gamma:.3f}")
    assert ok


def test_criterion_4_steady_state(report):
    p = SystemParams.at_m(alpha_for_nbar(10, 4), 2)
    setup = setup_mode(p)
    nex, outside, r2 = [], None, None
    for k1 in (1e-3, 1e-4):
        pops = steady_state_populations(p, NoiseParams(k1, 0.0, 0.0), setup=setup)
        pairs = pair_populations(np.diag(pops))
        nex.append(mean_excitation_degenerate(np.diag(pops), 2))
        if outside is None:
            outside = float(pairs[3:].sum())
            y = np.log(pairs[:3])
            x = np.arange(3)
            fit = np.polyval(np.polyfit(x, y, 1), x)
            r2 = 1 - np.sum((y - fit) ** 2) / np.sum((y - y.mean()) ** 2)
    drift = abs(nex[1] / nex[0] - 1)
    ok = abs(outside) < 1e-6 and r2 > 0.9 and drift < 0.01
    report("CRITERION 4 steady state", ok, f"outside {outside:.1e}, R2 {r2:.4f}, nbar_ex change {drift:.1e}")
    assert ok


def test_criterion_5_colored_leakage(report):
    p = SystemParams.at_m(alpha_for_nbar(10, 10), 5)
    setup = setup_mode(p, 14)
    on = colored_leakage(p, BENCHMARK_NOISE, setup=setup)
    off = uncolored_leakage(p, BENCHMARK_NOISE, setup=setup)
    ok = off / on >= 100
    report("CRITERION 5 colored leakage", ok, f"leakage {off:.2e} -> {on:.2e}, factor {off / on:.0f}")
    assert ok


def test_criterion_6_colored_bitflip_slope(report):
    envelope = []
    for nb in NBARS:
        envelope.append(
            min(colored_bitflip_rate(p, BENCHMARK_NOISE).gamma for _, p in _working_points(nb, min_alpha2=1.0))
        )
    gamma = _envelope_slope(NBARS, envelope)
    ok = abs(gamma - 0.89) <= 0.2
    report("CRITERION 6 colored bit-flip slope", ok, f"gamma = {gamma:.3f}")
    assert ok


@pytest.fixture(scope="module")
def zeno_point():
    al = alpha_for_nbar(8, 8)
    p = SystemParams.at_m(al, 4)
    nbar = code_states(diagonalize(p, n_levels=2)).nbar
    return p, nbar


def test_criterion_7a_closed_zeno(report, zeno_point):
    p, nbar = zeno_point
    Ts = np.geomspace(0.5, 10.0, 6)
    errs = np.array([zeno_z_gate(p, gaussian_pulse(T, math.pi, nbar, edge="shifted")).p_z_na for T in Ts])
    mono = bool(np.all(np.diff(errs) < 0))
    ok = mono and errs.min() < 1e-6
    report("CRITERION 7a closed Zeno", ok, "p_NA " + ", ".join(f"{e:.1e}" for e in errs))
    assert ok


ZENO_TS = [1.0, 2.0, 5.0, 10.0]


def _zeno_floor(p, nbar, kappa_eng, M=3):
    errs = [
        zeno_z_gate(p, gaussian_pulse(T, math.pi, nbar, edge="shifted"), kappa_eng=kappa_eng, M=M, dim_cap=14 * (M + 1)).p_z_na
        for T in ZENO_TS
    ]
    return np.array(errs)


def test_criterion_7b_colored_zeno_saturation(report, zeno_point):
    p, nbar = zeno_point
    strong = _zeno_floor(p, nbar, 1.0)
    weak = _zeno_floor(p, nbar, 0.1)
    drop = math.log10(strong.min() / weak.min())
    ok = strong.min() > 1e-2 and drop >= 1.5
    report("CRITERION 7b colored Zeno", ok, f"floor {strong.min():.2e} (K) vs {weak.min():.2e} (K/10), drop {drop:.2f} decades")
    assert ok


def test_criterion_7c_filter_modes(report, zeno_point):
    p, nbar = zeno_point
    three = _zeno_floor(p, nbar, 1.0, M=3)
    four = _zeno_floor(p, nbar, 1.0, M=4)
    dev = float(np.max(np.abs(four / three - 1)))
    ok = dev < 0.2
    report("CRITERION 7c M=3 vs M=4", ok, f"max relative difference {dev:.3f}")
    assert ok


def test_criterion_8_estimator_cross_validation(report):
    worst = 0.0
    times = np.array([0.05, 0.1, 0.2, 0.3]) / BENCHMARK_NOISE.kappa1
    for delta in (0, 4, 10):
        p = SystemParams.at_m(alpha_for_nbar(10, delta), delta // 2)
        est = perturbative_leakage(p, BENCHMARK_NOISE)
        setup = setup_mode(p)
        traj = evolve(mode_lindbladian(setup, BENCHMARK_NOISE), setup.rho0, times)
        for t, rho in zip(times, traj.states):
            full = pair_populations(rho)[:4]
            approx = est.pair_populations(t)[:4]
            keep = full > 1e-8
            worst = max(worst, float(np.max(np.abs(approx[keep] / full[keep] - 1))))
    ratios = []
    for nb in (4, 6):
        p = SystemParams(alpha_for_nbar(nb, 0))
        est = perturbative_bitflip_rate(perturbative_leakage(p, BENCHMARK_NOISE), BENCHMARK_NOISE.kappa1).gamma
        sim = excursion_rate(p, BENCHMARK_NOISE).gamma
        ratios.append(est / sim)
    rate_ok = all(0.5 <= r <= 2.0 for r in ratios)
    ok = worst <= 0.10 and rate_ok
    report(
        "CRITERION 8 estimator cross-validation",
        ok,
        f"max pair-population deviation {100 * worst:.1f}%, Gamma ratios " + ", ".join(f"{r:.3f}" for r in ratios),
    )
    assert ok


def test_criterion_9_oracle_suites(report):
    t0 = time.perf_counter()
    # trajectories check CPTP invariants as they are produced
    p = SystemParams.at_m(alpha_for_nbar(4, 4), 2)
    setup = setup_mode(p)
    traj = evolve(mode_lindbladian(setup, BENCHMARK_NOISE), setup.rho0, np.linspace(0, 2000, 5))
    cptp = traj.trace_drift < 1e-7 and traj.min_eigenvalue > -1e-7
    # analytic vs numeric degenerate states
    spec_err = 0.0
    for m in (1, 2, 3):
        q = SystemParams.at_m(2.0, m)
        b = FockBasis(70)
        man = analytic_degenerate_states(q, b)
        spec = diagonalize(q, b, n_levels=m + 1)
        spec_err = max(spec_err, float(np.max(np.abs(man.energies - spec.even_energies[: m + 1]))))
    # CNOT generator with the control replaced by +-alpha_tilde
    q = SystemParams.at_m(alpha_for_nbar(2, 2), 1)
    b = FockBasis(20)
    code = code_states(diagonalize(q, b, n_levels=2))
    at, a = code.alpha_tilde, annihilation(b).matrix
    const = q.K * (at**2 - q.alpha**2) ** 2 - q.delta * at**2
    cnot_err = 0.0
    for theta, rate in ((0.3, 0.05), (1.2, -0.1)):
        right = cnot_generator(q, q, np.array([[at]]), a, at, code.nbar).dense(theta, rate)
        left = cnot_generator(q, q, np.array([[-at]]), a, at, code.nbar).dense(theta, rate)
        static = rotated_hamiltonian(q, b, 0.0) + const * np.eye(b.dim)
        rotated = rotated_hamiltonian(q, b, -theta, -rate) + (const - rate * code.nbar) * np.eye(b.dim)
        cnot_err = max(cnot_err, np.abs(right - static).max(), np.abs(left - rotated).max())
    # Wigner function at the origin is the scaled parity
    b = FockBasis(40)
    wig_err = 0.0
    for ket in (coherent(1.5, b), coherent(1.5, b) - coherent(-1.5, b), coherent(0.7j, b)):
        ket = ket / np.linalg.norm(ket)
        rho = np.outer(ket, ket.conj())
        par = float(np.real(np.trace(rho @ parity(b).matrix)))
        wig_err = max(wig_err, abs(float(wigner_points(rho, np.array(0.0)).real) - 2 / math.pi * par))
    dt = time.perf_counter() - t0
    ok = cptp and spec_err < 1e-8 and cnot_err < 1e-12 and wig_err < 1e-8 and dt < 300
    report(
        "CRITERION 9 oracle suites",
        ok,
        f"CPTP {cptp}, spectral {spec_err:.1e}, CNOT reduction {cnot_err:.1e}, Wigner parity {wig_err:.1e}, {dt:.1f}s",
    )
    assert ok
