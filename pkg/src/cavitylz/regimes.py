"""Validity metrics, regime classification and feasibility estimates."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import C, HBAR, DomainError

REDUCTION_THRESHOLD = 1e4
ADIABATIC_THRESHOLD = 10.0
MOVING_MEDIUM_FLAG = 1e-2
CLASSES = ("schrodinger+adiabatic", "schrodinger+nonadiabatic", "outside-schrodinger")


def doppler_shift(omega_av: float, v: float) -> float:
    """Frequency change on reflection from a mirror moving at v, 2 omega v/c."""
    return 2 * omega_av * v / C


def adiabaticity_metric(T: float, omega_fsr: float, omega_av: float, v: float) -> float:
    """(T/4)(omega_fsr/omega_av)(c/v); infinite for a static mirror."""
    if T < 0 or not omega_fsr > 0 or not omega_av > 0 or v < 0:
        raise DomainError("need T >= 0, positive frequencies and v >= 0")
    if v == 0:
        return np.inf
    return 0.25 * T * (omega_fsr / omega_av) * (C / v)


def adiabaticity_metric_doppler(T: float, omega_fsr: float, doppler: float) -> float:
    """Same quantity written as (T/2) omega_fsr/delta_omega_dop."""
    return np.inf if doppler == 0 else 0.5 * T * omega_fsr / doppler


def reduction_metric(T: float, omega_av: float, omega_fsr: float) -> float:
    """(2 pi/sqrt(T))(omega_av/omega_fsr), roughly hbar*omega_av/gap."""
    if not 0 <= T <= 1:
        raise DomainError("T must lie in [0, 1]")
    if T == 0:
        return np.inf
    return 2 * np.pi / np.sqrt(T) * omega_av / omega_fsr


def mirror_speed_metric(T: float, v: float) -> float:
    """(sqrt(T)/2)/(v/c)."""
    if v < 0 or T < 0:
        raise DomainError("need T >= 0 and v >= 0")
    return np.inf if v == 0 else 0.5 * np.sqrt(T) * C / v


def mirror_speed_boundary(T: float):
    """Bound on v/c from the derivation, sqrt(T)/2, next to the looser sqrt(T)."""
    return 0.5 * np.sqrt(T), np.sqrt(T)


@dataclass(frozen=True)
class RegimeReport:
    adiabaticity_metric: float
    reduction_metric: float
    mirror_speed_metric: float
    classification: str
    T: float
    omega_fsr: float
    omega_av: float
    v: float

    def as_dict(self) -> dict:
        return asdict(self)


def classify_regime(T: float, omega_fsr: float, omega_av: float, v: float,
                    reduction_threshold: float = REDUCTION_THRESHOLD,
                    adiabatic_threshold: float = ADIABATIC_THRESHOLD) -> RegimeReport:
    red = reduction_metric(T, omega_av, omega_fsr)
    ad = adiabaticity_metric(T, omega_fsr, omega_av, v)
    if red < reduction_threshold:
        cls = CLASSES[2]
    elif ad > adiabatic_threshold:
        cls = CLASSES[0]
    else:
        cls = CLASSES[1]
    return RegimeReport(float(ad), float(red), float(mirror_speed_metric(T, v)), cls,
                        float(T), float(omega_fsr), float(omega_av), float(v))


def classify_grid(T_values, fsr_ratios, v: float, **thresholds):
    """Rows (T, omega_fsr/omega_av, class) over the outer product of the two axes."""
    return [(T, r, classify_regime(T, r, 1.0, v, **thresholds).classification)
            for T in T_values for r in fsr_ratios]


def regime_boundaries(T_values, v: float, reduction_threshold: float = REDUCTION_THRESHOLD,
                      adiabatic_threshold: float = ADIABATIC_THRESHOLD):
    """omega_fsr/omega_av on the two threshold contours, as functions of T."""
    T = np.asarray(T_values, dtype=float)
    reduction = 2 * np.pi / (np.sqrt(T) * reduction_threshold)
    with np.errstate(divide="ignore"):
        adiabatic = 4 * adiabatic_threshold * v / (C * T)
    return reduction, adiabatic


@dataclass(frozen=True)
class GoldenRule:
    fgr_rate: float
    hop_rate: float
    transmission: float


def golden_rule_rate(gap: float, L: float) -> GoldenRule:
    """Transition rate from the density of states, and from T per return time."""
    if gap < 0 or not L > 0:
        raise DomainError("need gap >= 0 and L > 0")
    rho = L / (2 * np.pi * HBAR * C)
    T = (gap * L / (HBAR * C)) ** 2
    return GoldenRule(2 * np.pi / HBAR * gap**2 * rho, T * C / L, T)


@dataclass(frozen=True)
class FeasibilityEstimate:
    transfer_time: float
    decay_rate: float
    survival: float
    escape: float
    doppler_shift: float


def decay_rate(cavity_length: float, finesse: float) -> float:
    """Field amplitude decay rate c*pi/(2 d F)."""
    if not finesse > 0 or not cavity_length > 0:
        raise DomainError("need positive finesse and length")
    return C * np.pi / (2 * cavity_length * finesse)


def feasibility_estimate(L: float, finesse: float, wavelength: float, v: float | None = None,
                         ramp_time: float | None = None, delta_L_span: float | None = None,
                         alpha: float | None = None) -> FeasibilityEstimate:
    """Loss during one transfer through the end mirrors.

    The transfer time is ``ramp_time`` if given, else delta_L_span/(2v),
    else a quarter-wave mirror move wavelength/(4v). ``survival`` is the
    field factor exp(-kappa t) and ``escape`` the photon loss
    1 - exp(-2 kappa t). ``alpha`` only documents the mirror the span was
    chosen for.
    """
    kappa = decay_rate(L, finesse)
    if ramp_time is not None:
        t = float(ramp_time)
    elif v is None or v < 0:
        raise DomainError("need a mirror speed or a ramp time")
    elif np.isinf(v):
        t = 0.0
    elif delta_L_span is not None:
        t = delta_L_span / (2 * v)
    else:
        t = wavelength / (4 * v)
    omega = 2 * np.pi * C / wavelength
    dop = doppler_shift(omega, v) if v is not None and np.isfinite(v) else np.inf
    return FeasibilityEstimate(t, kappa, float(np.exp(-kappa * t)), float(-np.expm1(-2 * kappa * t)), dop)


@dataclass(frozen=True)
class MovingMediumDiagnostic:
    correction: float
    retained: float
    ratio: float
    flagged: bool


def moving_medium_diagnostic(k: float, v: float, gap: float, omega_av: float,
                             flag_ratio: float = MOVING_MEDIUM_FLAG) -> MovingMediumDiagnostic:
    """Moving-dielectric term k^2 v/c against the smallest kept term omega_av*gap/(hbar c^2)."""
    if v < 0 or not k > 0 or not gap > 0 or not omega_av > 0:
        raise DomainError("need v >= 0 and positive k, gap, omega_av")
    corr = k * k * v / C
    kept = omega_av * gap / HBAR / C**2
    ratio = corr / kept
    return MovingMediumDiagnostic(corr, kept, ratio, bool(ratio > flag_ratio))
