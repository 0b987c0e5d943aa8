import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavitylz.model import (C, HBAR, CavityGeometry, DeltaMirror, DomainError, InterDielectricDelta,
                            SlabMirror, derive_dimensionless, mode_index)
from cavitylz.mode_solver import lz_fit_parameters

L = 1e-4


@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_geometry_round_trip_from_sides(a, b):
    g = CavityGeometry.from_sides(a, b)
    assert g.left_length + g.right_length == pytest.approx(a + b, rel=1e-15)
    assert g.left_length - g.right_length == pytest.approx(a - b, abs=4e-16 * (a + b))
    assert g.left_length == pytest.approx(a, rel=1e-14)


@pytest.mark.parametrize("Lt, dL", [(0.0, 0.0), (-1.0, 0.0), (1.0, 1.0), (1.0, -1.5), (np.nan, 0.0)])
def test_geometry_rejects_bad_values(Lt, dL):
    with pytest.raises(DomainError):
        CavityGeometry(Lt, dL)


def test_mirror_invariants():
    with pytest.raises(DomainError):
        DeltaMirror(-1e-9)
    with pytest.raises(DomainError):
        SlabMirror(0.0, 2.0)
    with pytest.raises(DomainError):
        SlabMirror(1e-7, 1.0)
    with pytest.raises(DomainError):
        InterDielectricDelta(1e-6, 0.9, 1.0)


def test_mode_index_for_optical_wavelength():
    assert mode_index(L, 780e-9) == 128


def _ultrafast_groups(dL_rate):
    lz = lz_fit_parameters(128, L, 0.01 * L)
    # the sweep-rate estimate 8 pi hbar c n v/L^2 for large n
    theta = 8 * np.pi * HBAR * C * 128 * dL_rate / L**2
    return derive_dimensionless(lz.gap, theta, lz.omega_av)


def test_dimensionless_sweep_rates():
    slow = _ultrafast_groups(1.6).theta_tilde
    assert slow == pytest.approx(2.78e-4, rel=0.01)
    assert 1e-4 < slow < 3e-4
    assert _ultrafast_groups(39000.0).theta_tilde == pytest.approx(6.8, rel=0.01)
    assert derive_dimensionless(1e-22, 0.0, 1e15).theta_tilde == 0.0


def test_dimensionless_rejects_non_positive():
    with pytest.raises(DomainError):
        derive_dimensionless(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        derive_dimensionless(1.0, 1.0, 0.0)


@given(st.floats(1e-24, 1e-20), st.floats(1e-15, 1e-5), st.floats(1e13, 1e16), st.floats(0.1, 10.0))
def test_dimensionless_homogeneity(gap, rate, omega, lam):
    a = derive_dimensionless(gap, rate, omega)
    b = derive_dimensionless(lam * gap, lam**2 * rate, lam * omega)
    assert b.theta_tilde == pytest.approx(a.theta_tilde, rel=1e-12)
    assert b.delta_ratio == pytest.approx(a.delta_ratio, rel=1e-12)


def test_tau_conversion():
    g = derive_dimensionless(HBAR * 1e12, 0.0, 1e15)
    assert g.tau(1e-12) == pytest.approx(1.0)
