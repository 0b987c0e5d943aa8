"""Adiabatic <-> diabatic rotation for one avoided crossing.

The diabatic hamiltonian has the Landau-Zener form [[E, D], [D, -E]] with
gap D. The rotation S = [[c, s], [-s, c]] with s <= 0 diagonalises it, and
the diabatic modes are phi_R = c U_e + s U_o and phi_L = -s U_e + c U_o.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import HBAR, DomainError


@dataclass(frozen=True)
class MixingAngle:
    cos_theta: float
    sin_theta: float

    @property
    def theta(self) -> float:
        return float(np.arctan2(self.sin_theta, self.cos_theta))

    def matrix(self) -> np.ndarray:
        c, s = self.cos_theta, self.sin_theta
        return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class TwoLevelMatrix:
    """Symmetric 2x2 matrix [[E, D], [D, -E]] in the diabatic basis."""

    energy: float
    gap: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.energy, self.gap], [self.gap, -self.energy]])

    @property
    def eigenvalues(self):
        s = np.hypot(self.energy, self.gap)
        return s, -s


def mixing_angle(E: float, gap: float) -> MixingAngle:
    """cos and sin of the rotation angle, with sin <= 0.

    The closed forms cos = sqrt((s + E)/2s), sin = -sqrt((s - E)/2s),
    s = sqrt(E**2 + gap**2), are evaluated on whichever side avoids
    cancellation; the other factor follows from 2 sin cos = -gap/s.
    """
    if not gap > 0:
        raise DomainError(f"gap must be positive, got {gap!r}")
    s = np.hypot(E, gap)
    if E >= 0:
        c = np.sqrt((s + E) / (2 * s))
        sn = -gap / (2 * s * c)
    else:
        sn = -np.sqrt((s - E) / (2 * s))
        c = gap / (2 * s * -sn)
    return MixingAngle(float(c), float(sn))


@dataclass(frozen=True)
class DiabaticPoint:
    energy: float
    omega_av: float


def diabatic_from_adiabatic(omega_e: float, omega_o: float, gap: float, rtol: float = 1e-12) -> DiabaticPoint:
    """Diabatic energy E >= 0 and mean frequency from the two global frequencies."""
    half = HBAR * (omega_e - omega_o) / 2
    d2 = half**2 - gap**2
    if d2 < 0:
        # the frequency difference itself carries ~omega*eps of rounding
        slack = 8 * gap * HBAR * max(abs(omega_e), abs(omega_o)) * np.finfo(float).eps
        if -d2 <= rtol * gap**2 + slack:
            d2 = 0.0
        else:
            raise DomainError("half splitting is smaller than the gap")
    return DiabaticPoint(float(np.sqrt(d2)), 0.5 * (omega_e + omega_o))


def adiabatic_from_diabatic(E: float, gap: float, omega_av: float):
    """(omega_e, omega_o) = omega_av +- sqrt(E**2 + gap**2)/hbar."""
    s = np.hypot(E, gap) / HBAR
    return omega_av + s, omega_av - s


def similarity_check(E: float, gap: float) -> float:
    """Max entry error of S diag(+s, -s) S^T against [[E, gap], [gap, -E]]."""
    S = mixing_angle(E, gap).matrix()
    s = np.hypot(E, gap)
    rebuilt = S @ np.diag([s, -s]) @ S.T
    return float(np.max(np.abs(rebuilt - TwoLevelMatrix(E, gap).matrix())))


def adiabatic_to_diabatic(coeffs, mix: MixingAngle) -> np.ndarray:
    """(a_e, a_o) -> (A_R, A_L)."""
    return mix.matrix() @ np.asarray(coeffs)


def diabatic_to_adiabatic(coeffs, mix: MixingAngle) -> np.ndarray:
    """(A_R, A_L) -> (a_e, a_o)."""
    return mix.matrix().T @ np.asarray(coeffs)


def rotate_profiles(U_e, U_o, mix: MixingAngle):
    """Diabatic mode functions (phi_L, phi_R) from the global pair."""
    c, s = mix.cos_theta, mix.sin_theta
    phi_R = c * np.asarray(U_e) + s * np.asarray(U_o)
    phi_L = -s * np.asarray(U_e) + c * np.asarray(U_o)
    return phi_L, phi_R


def diabatic_hamiltonian_coefficients(omega_av: float, E: float, gap: float) -> dict:
    """Coefficients of a_R^+ a_R, a_L^+ a_L and a_R^+ a_L in the two-mode hamiltonian (J)."""
    return {"c_RR": HBAR * omega_av + E, "c_LL": HBAR * omega_av - E, "c_RL": gap}
