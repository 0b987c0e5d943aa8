import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavitylz.basis import (MixingAngle, TwoLevelMatrix, adiabatic_from_diabatic, adiabatic_to_diabatic,
                            diabatic_from_adiabatic, diabatic_hamiltonian_coefficients, diabatic_to_adiabatic,
                            mixing_angle, rotate_profiles, similarity_check)
from cavitylz.field_profiles import mode_profile, weighted_overlap
from cavitylz.model import C, HBAR, CavityGeometry, DeltaMirror, DomainError
from cavitylz.mode_solver import fit_lz_from_spectrum, lz_fit_parameters, solve_global_pair
from cavitylz.regimes import golden_rule_rate

L = 1e-4
N = 128

energies = st.floats(-1e3, 1e3, allow_nan=False)
gaps = st.floats(1e-3, 1e3)


def direct_rebuild(E, D):
    """S H_ad S^T written out entry by entry, independent of the library's matrix helpers."""
    s = np.hypot(E, D)
    c = np.sqrt((s + E) / (2 * s))
    sn = -np.sqrt((s - E) / (2 * s))
    return np.array([[s * (c * c - sn * sn), -2 * s * c * sn], [-2 * s * c * sn, s * (sn * sn - c * c)]])


def test_mixing_angle_values():
    m = mixing_angle(0.0, 1.0)
    assert (m.cos_theta, m.sin_theta) == pytest.approx((2**-0.5, -(2**-0.5)), abs=1e-15)
    m = mixing_angle(1.0, 1.0)
    assert m.cos_theta == pytest.approx(np.cos(np.pi / 8), rel=1e-15)
    assert m.cos_theta == pytest.approx(0.92388, abs=1e-5)
    m = mixing_angle(1e9, 1.0)
    assert m.cos_theta == pytest.approx(1.0) and abs(m.sin_theta) < 1e-9
    assert m.sin_theta <= 0


def test_mixing_angle_needs_positive_gap():
    for g in (0.0, -1.0, np.nan):
        with pytest.raises(DomainError):
            mixing_angle(1.0, g)


@settings(max_examples=1000)
@given(energies, gaps)
def test_similarity_random_draws(E, D):
    assert similarity_check(E, D) < 1e-10 * max(1.0, np.hypot(E, D))
    ref = direct_rebuild(E, D)
    assert np.allclose(TwoLevelMatrix(E, D).matrix(), ref, atol=1e-9 * max(1.0, np.hypot(E, D)))


@pytest.mark.parametrize("E, D, tol", [(0.0, 1.0, 1e-12), (3.0, 4.0, 1e-12)])
def test_similarity_examples(E, D, tol):
    assert similarity_check(E, D) < tol
    assert TwoLevelMatrix(3.0, 4.0).eigenvalues == (5.0, -5.0)


@given(energies, gaps)
def test_rotation_is_orthogonal_with_unit_angle(E, D):
    m = mixing_angle(E, D)
    S = m.matrix()
    assert np.allclose(S.T @ S, np.eye(2), atol=1e-12)
    assert m.cos_theta**2 + m.sin_theta**2 == pytest.approx(1.0, abs=1e-12)
    assert m.sin_theta <= 0 and m.cos_theta >= 0


@given(energies, gaps, st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_basis_round_trip(E, D, a, b):
    m = mixing_angle(E, D)
    v = np.array([a, b])
    assert np.allclose(diabatic_to_adiabatic(adiabatic_to_diabatic(v, m), m), v, atol=1e-12 * (1 + abs(a) + abs(b)))


def test_mixing_angle_matches_closed_form_without_cancellation():
    # tiny gap on the negative side: the closed-form cos suffers cancellation, the library does not
    m = mixing_angle(-1.0, 1e-6)
    assert m.cos_theta == pytest.approx(5e-7, rel=1e-9)
    assert m.sin_theta == pytest.approx(-1.0, rel=1e-12)


def test_theta_property():
    assert MixingAngle(2**-0.5, -(2**-0.5)).theta == pytest.approx(-np.pi / 4)


# ------------------------------------------------------------ diabatic energies

def test_diabatic_at_crossing():
    D = HBAR * 7e11
    w = 2.4e15
    p = diabatic_from_adiabatic(w + D / HBAR, w - D / HBAR, D)
    assert p.energy == 0.0
    assert p.omega_av == w


@given(st.floats(-1e-21, 1e-21), st.floats(1e-24, 1e-21), st.floats(1e14, 1e16))
def test_diabatic_round_trip(E, D, w):
    we, wo = adiabatic_from_diabatic(E, D, w)
    p = diabatic_from_adiabatic(we, wo, D)
    assert p.omega_av == pytest.approx(w, rel=1e-12)
    # subtracting two ~omega_av frequencies costs ~hbar*omega_av*eps in the half splitting
    err = 8 * np.hypot(E, D) * HBAR * w * np.finfo(float).eps
    assert abs(p.energy**2 - E**2) <= err + 1e-12 * E**2
    we2, wo2 = adiabatic_from_diabatic(p.energy, D, p.omega_av)
    assert (we2, wo2) == pytest.approx((we, wo), rel=1e-12)


def test_inconsistent_gap_rejected():
    with pytest.raises(DomainError):
        diabatic_from_adiabatic(2.0e15 + 1e11, 2.0e15 - 1e11, HBAR * 2e11)


def test_diabatic_energy_of_solved_pair_matches_fit():
    a = 1e-6
    rows = [(d,) + (lambda p: (p.k_even, p.k_odd))(solve_global_pair(CavityGeometry(L, d), DeltaMirror(a), N))
            for d in np.linspace(-4e-8, 4e-8, 41)]
    fit = fit_lz_from_spectrum(rows)
    p = solve_global_pair(CavityGeometry(L, 2e-8), DeltaMirror(a), N)
    half = HBAR * C * (p.k_even - p.k_odd) / 2
    E_split = np.sqrt(half**2 - fit.gap**2)
    E = diabatic_from_adiabatic(C * p.k_even, C * p.k_odd, fit.gap).energy
    assert E > 0
    assert E == pytest.approx(E_split, rel=1e-9)
    assert E == pytest.approx(np.sqrt(fit.curvature) * 2e-8, rel=0.03)


# ------------------------------------------------------------ hamiltonian coefficients

def test_coefficients_at_symmetric_point():
    c = diabatic_hamiltonian_coefficients(2e15, 0.0, 1e-22)
    assert c["c_RR"] == c["c_LL"] == HBAR * 2e15


@given(st.floats(-1e-21, 1e-21), st.floats(1e-24, 1e-21))
def test_coefficient_eigenvalues_are_adiabatic_energies(E, D):
    w = 2.4e15
    c = diabatic_hamiltonian_coefficients(w, E, D)
    ev = np.linalg.eigvalsh(np.array([[c["c_RR"], c["c_RL"]], [c["c_RL"], c["c_LL"]]]) - HBAR * w * np.eye(2))
    we, wo = adiabatic_from_diabatic(E, D, w)
    assert ev[1] == pytest.approx(HBAR * (we - w), rel=1e-6, abs=1e-30)
    assert ev[0] == pytest.approx(HBAR * (wo - w), rel=1e-6, abs=1e-30)


def test_gap_to_frequency_ratio():
    lz = lz_fit_parameters(N, L, 0.01 * L)
    c = diabatic_hamiltonian_coefficients(lz.omega_av, 0.0, HBAR * 7e11)
    assert c["c_RL"] / c["c_RR"] == pytest.approx(3e-4, rel=0.05)


# ------------------------------------------------------------ rotated profiles

@pytest.mark.parametrize("dL", [0.0, 2e-8, -3e-8])
def test_rotated_profiles_stay_orthonormal(dL):
    g = CavityGeometry(L, dL)
    m = DeltaMirror(1e-6)
    p = solve_global_pair(g, m, N)
    e = mode_profile(p, "even", g, m, n_samples=128)
    o = mode_profile(p, "odd", g, m, n_samples=128)
    lz = lz_fit_parameters(N, L, 1e-6)
    E = diabatic_from_adiabatic(C * p.k_even, C * p.k_odd, lz.gap, rtol=0.1).energy if dL else 0.0
    phi_L, phi_R = rotate_profiles(e.U, o.U, mixing_angle(E, lz.gap))
    from dataclasses import replace
    pl, pr = replace(e, U=phi_L), replace(e, U=phi_R)
    assert abs(weighted_overlap(pl, pr, m.alpha)) < 1e-6
    assert weighted_overlap(pl, pl, m.alpha) == pytest.approx(1.0, abs=1e-6)
    assert weighted_overlap(pr, pr, m.alpha) == pytest.approx(1.0, abs=1e-6)


# ------------------------------------------------------------ golden rule

@given(st.floats(1e-26, 1e-20), st.floats(1e-6, 1.0))
def test_golden_rule_identity(D, length):
    g = golden_rule_rate(D, length)
    assert g.transmission == pytest.approx((D * length / (HBAR * C)) ** 2, rel=1e-14)
    assert g.hop_rate == pytest.approx(g.fgr_rate, rel=1e-12)
