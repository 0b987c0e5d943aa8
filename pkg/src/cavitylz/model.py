"""Domain types, physical constants and dimensionless groups.

All lengths are in meters, wave numbers in 1/m and angular frequencies in
rad/s. Energies (gap, diabatic energy) are in joules.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import constants as _sc


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = _sc.c
    hbar: float = _sc.hbar


CONSTANTS = PhysicalConstants()
C = CONSTANTS.c
HBAR = CONSTANTS.hbar


@dataclass(frozen=True)
class CavityGeometry:
    """Double cavity of total length L with length difference dL = L1 - L2."""

    total_length: float
    length_difference: float = 0.0

    def __post_init__(self):
        L, dL = self.total_length, self.length_difference
        if not np.isfinite(L) or L <= 0:
            raise DomainError(f"total length must be positive, got {L!r}")
        if not np.isfinite(dL) or abs(dL) >= L:
            raise DomainError(f"|dL| must be smaller than L, got dL={dL!r}, L={L!r}")

    @classmethod
    def from_sides(cls, left: float, right: float) -> "CavityGeometry":
        return cls(left + right, left - right)

    @property
    def left_length(self) -> float:
        return 0.5 * (self.total_length + self.length_difference)

    @property
    def right_length(self) -> float:
        return 0.5 * (self.total_length - self.length_difference)

    def with_difference(self, dL: float) -> "CavityGeometry":
        return CavityGeometry(self.total_length, dL)


@dataclass(frozen=True)
class DeltaMirror:
    """Infinitely thin mirror, permittivity spike of strength alpha (m)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha!r}")


@dataclass(frozen=True)
class SlabMirror:
    """Dielectric slab of width 2M and refractive index n_r centred at x = 0."""

    half_width: float
    index: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError(f"half width must be positive, got {self.half_width!r}")
        if not self.index > 1:
            raise DomainError(f"slab index must exceed 1, got {self.index!r}")


@dataclass(frozen=True)
class InterDielectricDelta:
    """Thin mirror separating two dielectrics of index n1 (left) and n2 (right)."""

    alpha: float
    n1: float = 1.0
    n2: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha!r}")
        if not (self.n1 >= 1 and self.n2 >= 1):
            raise DomainError(f"indices must be >= 1, got n1={self.n1!r}, n2={self.n2!r}")


MirrorModel = Union[DeltaMirror, SlabMirror, InterDielectricDelta]


@dataclass(frozen=True)
class DimensionlessGroups:
    """Scaled sweep rate, gap-to-photon-energy ratio, and the time unit hbar/gap."""

    theta_tilde: float
    delta_ratio: float
    time_unit: float

    def tau(self, t):
        """Dimensionless time tau = gap * t / hbar."""
        return np.asarray(t) / self.time_unit


def derive_dimensionless(gap: float, sweep_rate: float, omega_av: float) -> DimensionlessGroups:
    """theta~ = hbar*theta/gap**2 and delta_ratio = gap/(hbar*omega_av)."""
    if not gap > 0:
        raise DomainError(f"gap must be positive, got {gap!r}")
    if not omega_av > 0:
        raise DomainError(f"omega_av must be positive, got {omega_av!r}")
    if not sweep_rate >= 0:
        raise DomainError(f"sweep rate must be non-negative, got {sweep_rate!r}")
    return DimensionlessGroups(
        theta_tilde=HBAR * sweep_rate / gap**2,
        delta_ratio=gap / (HBAR * omega_av),
        time_unit=HBAR / gap,
    )


def mode_index(L: float, wavelength: float) -> int:
    """Crossing index n whose localized wave number 2*pi*n/L is nearest 2*pi/wavelength."""
    return max(1, int(round(L / wavelength)))
