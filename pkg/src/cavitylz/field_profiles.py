"""Mode profiles, weighted normalisation and transfer ratios.

Profiles use U = A sin[k(x + L1)] left of the mirror and
U = B sin[k(x - L2)] right of it, with the mirror at x = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .model import CavityGeometry, DeltaMirror, DomainError
from .mode_solver import ModeBranchPair, optimal_displacement, solve_global_pair

RATIO_CAP = 1e12


def amplitude_ratio(k, L, dL, with_flag=False):
    """A/B = -sin[k(L - dL)/2] / sin[k(L + dL)/2].

    A vanishing denominator means the mode is localized entirely on the
    right; the value is then capped at +-1e12 and, with ``with_flag``,
    a boolean mask marks the capped entries.
    """
    k = np.asarray(k, dtype=float)
    num = -np.sin(0.5 * k * (L - dL))
    den = np.sin(0.5 * k * (L + dL))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    capped = ~np.isfinite(r) | (np.abs(r) > RATIO_CAP)
    sign = np.where(np.signbit(den) ^ np.signbit(num), -1.0, 1.0)
    r = np.where(capped, sign * RATIO_CAP, r)
    if r.ndim == 0:
        r, capped = float(r), bool(capped)
    return (r, capped) if with_flag else r


@dataclass(frozen=True)
class ModeProfile:
    x: np.ndarray
    U: np.ndarray
    k: float
    A: float
    B: float
    geometry: CavityGeometry
    branch: str = ""
    alpha: float = 0.0

    @property
    def center_value(self) -> float:
        return self.A * np.sin(self.k * self.geometry.left_length)


def cavity_grid(geom: CavityGeometry, k: float, n_samples: int = 64) -> np.ndarray:
    """Uniform-per-side grid with nodes at -L1, 0 and L2 and n_samples per half wavelength."""
    if n_samples < 16:
        raise DomainError("need at least 16 samples per half wavelength")
    L1, L2 = geom.left_length, geom.right_length
    m1 = max(2, int(np.ceil(n_samples * k * L1 / np.pi)))
    m2 = max(2, int(np.ceil(n_samples * k * L2 / np.pi)))
    return np.concatenate([np.linspace(-L1, 0.0, m1 + 1), np.linspace(0.0, L2, m2 + 1)[1:]])


def _amplitudes(k, L1, L2, alpha):
    # continuity and derivative jump at the mirror: null vector of a 2x2 system
    s1, c1 = np.sin(k * L1), np.cos(k * L1)
    s2, c2 = np.sin(k * L2), np.cos(k * L2)
    Mx = np.array([[s1, s2], [-c1 + alpha * k * s1, c2]])
    _, _, vt = np.linalg.svd(Mx)
    A, B = vt[-1]
    if A < 0 or (A == 0 and B < 0):
        A, B = -A, -B
    return float(A), float(B)


def evaluate_profile(x, k, A, B, geom: CavityGeometry):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, A * np.sin(k * (x + geom.left_length)), B * np.sin(k * (x - geom.right_length)))


def weighted_overlap(p: ModeProfile, q: ModeProfile, alpha: float) -> float:
    """Trapezoid integral of p*q plus the point-mass term alpha*p(0)*q(0)."""
    if p.x.shape != q.x.shape or not np.array_equal(p.x, q.x):
        raise DomainError("profiles must share a grid")
    i0 = int(np.searchsorted(p.x, 0.0))
    return float(trapezoid(p.U * q.U, p.x) + alpha * p.U[i0] * q.U[i0])


def normalize_mode(profile: ModeProfile, mirror: DeltaMirror) -> ModeProfile:
    """Scale so that the integral of U**2 plus alpha*U(0)**2 equals 1."""
    norm2 = weighted_overlap(profile, profile, mirror.alpha)
    if not norm2 > 0:
        raise DomainError("zero-norm profile")
    s = 1.0 / np.sqrt(norm2)
    return replace(profile, U=profile.U * s, A=profile.A * s, B=profile.B * s, alpha=mirror.alpha)


def mode_profile(pair: ModeBranchPair, branch: str, geom: CavityGeometry, mirror: DeltaMirror,
                 n_samples: int = 64) -> ModeProfile:
    """Normalised profile of one branch of a solved pair.

    Both branches of a pair are sampled on the same grid, sized by the
    larger wave number, so their overlaps can be taken directly.
    """
    if branch not in ("even", "odd"):
        raise DomainError("branch must be 'even' or 'odd'")
    k = pair.k_even if branch == "even" else pair.k_odd
    x = cavity_grid(geom, max(pair.k_even, pair.k_odd), n_samples)
    A, B = _amplitudes(k, geom.left_length, geom.right_length, mirror.alpha)
    U = evaluate_profile(x, k, A, B, geom)
    return normalize_mode(ModeProfile(x, U, k, A, B, geom, branch), mirror)


def side_weights(profile: ModeProfile):
    """Integrals of U**2 over the left and right cavities."""
    x, U = profile.x, profile.U
    left = x <= 0
    right = x >= 0
    return float(trapezoid(U[left] ** 2, x[left])), float(trapezoid(U[right] ** 2, x[right]))


@dataclass(frozen=True)
class TransferMaximum:
    approx: float
    exact: float
    delta_L_star: float
    k_star: float


def max_transfer_ratio(n: int, L: float, alpha: float, scan_points: int = 400) -> TransferMaximum:
    """Largest |B/A| on the even branch between dL = 0 and the next slanted crossing.

    ``approx`` is the large alpha*k estimate 2*n*pi*alpha/L.
    """
    if n < 1 or not alpha > 0:
        raise DomainError("need n >= 1 and alpha > 0")
    mirror = DeltaMirror(alpha)

    def inv_ratio(dL):
        p = solve_global_pair(CavityGeometry(L, dL), mirror, n)
        return abs(1.0 / amplitude_ratio(p.k_even, L, dL)), p.k_even

    edge = L / (2 * n + 1)
    grid = np.linspace(edge * 1e-3, edge * (1 - 1e-3), scan_points)
    vals = np.array([inv_ratio(d)[0] for d in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda d: -inv_ratio(d)[0], bounds=(lo, hi), method="bounded",
                          options={"xatol": edge * 1e-10})
    d_star = float(res.x)
    best, k_star = inv_ratio(d_star)
    return TransferMaximum(2 * n * np.pi * alpha / L, best, d_star, k_star)


def ratio_at_optimum(n: int, L: float, alpha: float, parity: str = "even") -> float:
    """|B/A| (even) or |A/B| (odd) evaluated at the optimal displacement."""
    dL = optimal_displacement(n, L, alpha, parity).delta_L_star
    p = solve_global_pair(CavityGeometry(L, dL), DeltaMirror(alpha), n)
    k = p.k_even if parity == "even" else p.k_odd
    r = amplitude_ratio(k, L, dL)
    return abs(1.0 / r) if parity == "even" else abs(r)
