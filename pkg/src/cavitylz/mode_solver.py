"""Global mode wave numbers of the double cavity.

Roots are located by eigenvalue counting. For a one dimensional
Sturm-Liouville problem with Dirichlet end mirrors, the phase angle
theta(k) (tan theta = k n U / U') accumulated from the left end to the
right end is monotone in k, and the j-th mode satisfies theta(k) = j*pi.
This labels every root by its index j, so modes are never lost or swapped
near tiny gaps. Each root is then checked against the bounded rewritten
transcendental residual.

Pair n at dL = 0 consists of the modes j = 2n (odd) and j = 2n + 1 (even)
for the thin mirror models.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .model import (C, HBAR, CavityGeometry, DeltaMirror, DomainError,
                    SlabMirror)

RTOL = 8.9e-16  # smallest relative tolerance brentq accepts
EPS = np.finfo(float).eps


class SolverError(RuntimeError):
    """Root bracketing or polishing failed; ``interval`` is the scanned k range."""

    def __init__(self, msg, interval=None):
        super().__init__(msg)
        self.interval = interval


@dataclass(frozen=True)
class ModeBranchPair:
    n: int
    k_even: float
    k_odd: float
    residual_even: float
    residual_odd: float
    delta_L: float
    # extra roots returned when a slab resonance crowds the window
    window_roots: tuple = ()
    clustered: bool = False

    @property
    def k_gap(self) -> float:
        return abs(self.k_even - self.k_odd)

    @property
    def k_mid(self) -> float:
        return 0.5 * (self.k_even + self.k_odd)


@dataclass(frozen=True)
class LZParameters:
    """Landau-Zener parameters: gap (J), curvature (J^2/m^2), sweep rate (J/s), omega_av (rad/s)."""

    gap: float
    curvature: float
    omega_av: float
    sweep_rate: float = 0.0

    def with_speed(self, v: float) -> "LZParameters":
        """Set the sweep rate for a central mirror moving at speed v (dL = 2 v t)."""
        return LZParameters(self.gap, self.curvature, self.omega_av, 4.0 * v * np.sqrt(self.curvature))

    def diabatic_energy(self, dL):
        return np.sqrt(self.curvature) * np.asarray(dL)

    def wavenumbers(self, dL, L: float, n: int):
        """Fitted LZ forms for (k_even, k_odd) at displacement dL."""
        base = 2 * np.pi * n / L + self.gap / (HBAR * C)
        split = np.sqrt(self.gap**2 + self.curvature * np.asarray(dL) ** 2) / (HBAR * C)
        return base + split, base - split


@dataclass
class SpectrumTable:
    """Rows (dL, n, branch, k) sorted by (dL, n, branch)."""

    delta_L: np.ndarray
    n: np.ndarray
    branch: np.ndarray
    k: np.ndarray
    residual: np.ndarray
    pairs: list = field(default_factory=list)

    def __len__(self):
        return len(self.k)

    def rows(self):
        for i in range(len(self.k)):
            yield float(self.delta_L[i]), int(self.n[i]), str(self.branch[i]), float(self.k[i])

    def select(self, n: int, branch: str):
        m = (self.n == n) & (self.branch == branch)
        return self.delta_L[m], self.k[m]


BRANCH_ORDER = ("even", "odd", "localized-left", "localized-right")


# ---------------------------------------------------------------- residuals

def localized_wavenumbers(geom: CavityGeometry, n: int):
    """Wave numbers 2*pi*n/(L +- dL) of modes trapped left / right of a perfect mirror."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    L, dL = geom.total_length, geom.length_difference
    return 2 * np.pi * n / (L + dL), 2 * np.pi * n / (L - dL)


def delta_residual(k, L, dL, alpha):
    """cos(k dL) - cos(k L) - 2 sin(k L)/(alpha k), zero at the global wave numbers.

    Multiplied by alpha k/(alpha k + 2) so it stays O(1) when alpha k is small.
    """
    k = np.asarray(k, dtype=float)
    ak = alpha * k
    return (ak * (np.cos(k * dL) - np.cos(k * L)) - 2 * np.sin(k * L)) / (ak + 2)


def slab_residual(k, L, dL, M, nr):
    """Slab transcendental function divided by its magnitude scale nr**2 + nr + 1."""
    k = np.asarray(k, dtype=float)
    a = k * (0.5 * L - M + 0.5 * dL)
    b = k * (0.5 * L - M - 0.5 * dL)
    th = 2 * nr * k * M
    f = (-nr**2 * np.sin(th) * np.sin(a) * np.sin(b)
         + nr * np.cos(th) * np.sin(a + b)
         + np.sin(th) * np.cos(a) * np.cos(b))
    return f / (nr**2 + nr + 1)


def waveguide_residual(k, L, n0, eta, alpha):
    """Rewritten waveguide equation: optical lengths n1 L/2, n2 L/2 and alpha k -> alpha k/n0."""
    k = np.asarray(k, dtype=float)
    ak = alpha * k / n0
    return (ak * (np.cos(k * eta * L) - np.cos(k * n0 * L)) - 2 * np.sin(k * n0 * L)) / (ak + 2)


# ---------------------------------------------------------------- phase counting

def _wrap(theta):
    # floor(theta/pi) can round up and leave phi slightly negative
    m = np.floor(theta / np.pi)
    phi = theta - m * np.pi
    if phi < 0:
        m, phi = m - 1, phi + np.pi
    return m, phi


def _through_delta(theta, ak):
    # U continuous, U' jumps by -alpha k^2 U: cot(theta) -> cot(theta) - alpha k
    m, phi = _wrap(theta)
    if phi == 0.0:
        return theta
    return m * np.pi + 0.5 * np.pi - np.arctan(1.0 / np.tan(phi) - ak)


def _through_interface(theta, ratio):
    # U, U' continuous, tan(theta) = k n U/U' scales by n_new/n_old
    m, phi = _wrap(theta)
    if phi == 0.0:
        return theta
    return m * np.pi + np.arctan2(ratio * np.sin(phi), np.cos(phi))


def delta_phase(k, L1, L2, alpha):
    """Accumulated phase angle across the cavity with a delta mirror at the junction."""
    return _through_delta(k * L1, alpha * k) + k * L2


def slab_phase(k, L, dL, M, nr):
    th = k * (0.5 * (L + dL) - M)
    th = _through_interface(th, nr)
    th += 2 * nr * k * M
    th = _through_interface(th, 1.0 / nr)
    return th + k * (0.5 * (L - dL) - M)


def _kth_dirichlet(j, L1, L2):
    """j-th smallest of {m pi/L1} U {m pi/L2}, m >= 1 (decoupled spectrum)."""
    m = np.arange(1, j + 1)
    return np.sort(np.concatenate([m * np.pi / L1, m * np.pi / L2]))[j - 1]


def _solve_index(phase, j, lo, hi):
    g = lambda k: phase(k) - j * np.pi
    glo, ghi = g(lo), g(hi)
    if glo >= 0:
        return lo
    if ghi <= 0:
        return hi
    if not (glo < 0 < ghi):
        raise SolverError(f"no sign change for mode index {j}", (lo, hi))
    return brentq(g, lo, hi, xtol=1e-300, rtol=RTOL, maxiter=400)


def delta_eigen_wavenumber(j: int, L: float, dL: float, alpha: float) -> float:
    """k of the j-th global mode (j = 1 is the fundamental) for a delta mirror."""
    L1, L2 = 0.5 * (L + dL), 0.5 * (L - dL)
    if alpha == 0:
        return j * np.pi / L
    # the root falls monotonically with alpha from j pi/L to the (j-1)-th decoupled value
    lo = _kth_dirichlet(j - 1, L1, L2) if j > 1 else 1e-300
    hi = j * np.pi / L
    return _solve_index(lambda k: delta_phase(k, L1, L2, alpha), j, lo, hi)


def slab_eigen_wavenumber(j: int, L: float, dL: float, M: float, nr: float) -> float:
    """k of the j-th global mode for a slab mirror of half width M and index nr."""
    Lopt = L - 2 * M + 2 * M * nr
    lo = max((j - 1) * np.pi / Lopt, 1e-300)
    hi = (j + 1) * np.pi / (L - 2 * M)
    return _solve_index(lambda k: slab_phase(k, L, dL, M, nr), j, lo, hi)


def _residual_floor(kL):
    # conditioning floor of cos/sin evaluated at large phase
    return 64 * EPS * max(1.0, abs(kL))


def _check(res, tol, kL, what):
    if abs(res) > max(tol, _residual_floor(kL)):
        raise SolverError(f"{what}: residual {res:.3e} above tolerance {tol:.1e}")


# ---------------------------------------------------------------- delta mirror

def solve_global_pair(geom: CavityGeometry, mirror: DeltaMirror, n: int, tol: float = 1e-12) -> ModeBranchPair:
    """Even and odd global wave numbers of crossing n for a delta mirror."""
    if not mirror.alpha > 0:
        raise DomainError("alpha must be positive; use k = m pi/L for an empty cavity")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    L, dL, a = geom.total_length, geom.length_difference, mirror.alpha
    if dL == 0.0:
        k_odd = 2 * np.pi * n / L  # node at the mirror, unaffected by it
    else:
        k_odd = delta_eigen_wavenumber(2 * n, L, dL, a)
    k_even = delta_eigen_wavenumber(2 * n + 1, L, dL, a)
    r_e = float(delta_residual(k_even, L, dL, a))
    r_o = float(delta_residual(k_odd, L, dL, a))
    _check(r_e, tol, k_even * L, f"even root n={n}, dL={dL}")
    _check(r_o, tol, k_odd * L, f"odd root n={n}, dL={dL}")
    return ModeBranchPair(n, k_even, k_odd, r_e, r_o, dL)


def approx_wavenumbers_quadratic(n: int, L: float, alpha: float, dL):
    """Quadratic expansion of (k_even, k_odd) near the crossing."""
    k0 = 2 * np.pi * n / L
    curv = 2 * np.pi**3 * n**3 * alpha * np.asarray(dL) ** 2 / L**4
    k_e = k0 + k0 / (1 + n**2 * np.pi**2 * alpha / L) + curv
    k_o = k0 - curv
    return k_e, k_o


def lz_fit_parameters(n: int, L: float, alpha: float) -> LZParameters:
    """Analytic gap, curvature and mean frequency from matching the Taylor expansions."""
    if n < 1 or not alpha > 0:
        raise DomainError("need n >= 1 and alpha > 0")
    gap = (HBAR * C / L) * n * np.pi / (1 + n**2 * np.pi**2 * alpha / L)
    curv = 2 * gap * HBAR * C * 2 * np.pi**3 * n**3 * alpha / L**4
    omega_av = 2 * np.pi * n * C / L + gap / HBAR
    return LZParameters(gap, curv, omega_av)


def fit_lz_from_spectrum(samples: Sequence) -> LZParameters:
    """Least-squares fit of gap and curvature from (dL, k_even, k_odd) samples.

    Uses (hbar c (k_e - k_o)/2)**2 = gap**2 + curvature dL**2, which is linear
    in the two unknowns.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 3:
        raise DomainError("samples must be rows of (dL, k_even, k_odd)")
    dL, ke, ko = s.T
    if np.any(ke < ko):
        raise DomainError("every sample needs k_even >= k_odd")
    if np.ptp(dL) == 0:
        if len(dL) and dL[0] == 0:
            gap = HBAR * C * np.mean(ke - ko) / 2
            return LZParameters(gap, 0.0, C * np.mean(ke + ko) / 2)
        raise SolverError("degenerate samples: all at one displacement")
    y = (HBAR * C * (ke - ko) / 2) ** 2
    # scale both sides to O(1) so lstsq's rank cutoff does not drop the dL**2 column
    sx, sy = np.max(np.abs(dL)), np.max(y)
    X = np.column_stack([np.ones_like(dL), (dL / sx) ** 2])
    (g2, curv), *_ = np.linalg.lstsq(X, y / sy, rcond=None)
    g2, curv = g2 * sy, curv * sy / sx**2
    if g2 <= 0 or curv <= 0:
        raise SolverError(f"fit produced non-positive parameters ({g2:.3e}, {curv:.3e})")
    return LZParameters(float(np.sqrt(g2)), float(curv), float(C * np.mean(ke + ko) / 2))


def optimal_wavenumber_residual(x, a):
    """cos x + (sin x/x)(2 + a)/a with x = k L and a = alpha/L."""
    return np.cos(x) + np.sin(x) / x * (2 + a) / a


@dataclass(frozen=True)
class OptimalDisplacement:
    k_star: float
    delta_L_star: float
    first_order_kL: float
    expanded: bool  # True when the arccos argument left [-1, 1]


def optimal_displacement(n: int, L: float, alpha: float, parity: str = "even") -> OptimalDisplacement:
    """Wave number and displacement where the transfer ratio of a branch peaks.

    The even branch uses (4n + 1) pi/2 and the odd branch (4n - 1) pi/2.
    """
    if parity not in ("even", "odd"):
        raise DomainError("parity must be 'even' or 'odd'")
    a = alpha / L
    sgn = 1 if parity == "even" else -1
    base = (4 * n + sgn) * np.pi / 2
    x0 = base + (2 + a) / (2 * np.pi * n * a)
    # the root lies within a quarter period of the first-order estimate
    h = 0.25 * np.pi
    x = brentq(optimal_wavenumber_residual, x0 - h, x0 + h, args=(a,), xtol=1e-300, rtol=RTOL)
    k = x / L
    arg = 2 * np.sin(x) / (alpha * k) + np.cos(x)
    if -1 <= arg <= 1:
        return OptimalDisplacement(k, float(np.arccos(arg) / k), x0, False)
    if alpha * k < 10:
        raise DomainError(f"arccos argument {arg:.6f} outside [-1, 1] and alpha k = {alpha * k:.3g} is not large")
    dLs = (0.5 * np.pi - 2 / (alpha * k) + x - base) / k
    return OptimalDisplacement(k, float(dLs), x0, True)


# ---------------------------------------------------------------- slab mirror

def _slab_pair_index(L, M, nr, n):
    """Lower eigen index j of the crossing pair nearest the localized reference 2 pi n/(L - 2M)."""
    kref = 2 * np.pi * n / (L - 2 * M)
    Lopt = L - 2 * M + 2 * M * nr
    j0 = max(1, int(round(kref * Lopt / np.pi)))
    js = np.arange(max(1, j0 - 4 - int(nr)), j0 + 5)
    ks = np.array([slab_eigen_wavenumber(int(j), L, 0.0, M, nr) for j in js])
    i = int(np.argmin(np.abs(ks - kref)))
    if i == 0 or i == len(ks) - 1:
        raise SolverError("reference wave number not inside the scanned index window", (ks[0], ks[-1]))
    below, above = ks[i] - ks[i - 1], ks[i + 1] - ks[i]
    lower = int(js[i]) if above < below else int(js[i - 1])
    gaps = sorted([below, above])
    return lower, gaps[0] / gaps[1], ks


def _slab_parity(k, L, M, nr):
    """+1 for a mode symmetric about the slab centre (dL = 0), -1 otherwise."""
    d = 0.5 * L - M
    u, up = np.sin(k * d), k * np.cos(k * d)
    q = nr * k
    # field and slope at the slab centre
    uc = u * np.cos(q * M) + up / q * np.sin(q * M)
    upc = -u * q * np.sin(q * M) + up * np.cos(q * M)
    return 1 if abs(upc) / q < abs(uc) else -1


def solve_finite_mirror_pair(geom: CavityGeometry, mirror: SlabMirror, n: int, tol: float = 1e-12,
                             cluster_ratio: float = 0.5) -> ModeBranchPair:
    """Crossing pair of a slab mirror whose ladder is nearest 2 pi n/(L - 2M).

    The two modes are identified at dL = 0 as the adjacent pair with the
    smaller gap and followed by index to the requested dL. Labels follow the
    true parity at dL = 0, so k_even < k_odd is possible past a slab
    resonance. When the two neighbouring gaps are comparable (ratio above
    ``cluster_ratio``) the pair is flagged as clustered and the scanned
    roots are returned in ``window_roots``.
    """
    L, dL = geom.total_length, geom.length_difference
    M, nr = mirror.half_width, mirror.index
    if L <= 2 * M:
        raise DomainError("cavity must be longer than the slab")
    if tol <= 0:
        raise DomainError("tol must be positive")
    j, ratio, ks = _slab_pair_index(L, M, nr, n)
    k_lo0 = slab_eigen_wavenumber(j, L, 0.0, M, nr)
    lower_is_even = _slab_parity(k_lo0, L, M, nr) > 0
    k_lo = slab_eigen_wavenumber(j, L, dL, M, nr)
    k_hi = slab_eigen_wavenumber(j + 1, L, dL, M, nr)
    k_e, k_o = (k_lo, k_hi) if lower_is_even else (k_hi, k_lo)
    r_e = float(slab_residual(k_e, L, dL, M, nr))
    r_o = float(slab_residual(k_o, L, dL, M, nr))
    _check(r_e, tol, k_e * L * nr, f"slab even root n={n}")
    _check(r_o, tol, k_o * L * nr, f"slab odd root n={n}")
    clustered = bool(ratio > cluster_ratio)
    window = tuple(float(k) for k in ks) if clustered else ()
    return ModeBranchPair(n, k_e, k_o, r_e, r_o, dL, window, clustered)


def slab_crossing_partner(L: float, mirror: SlabMirror, j: int) -> int:
    """+1 if mode j forms its dL = 0 crossing with mode j + 1, -1 if with j - 1."""
    M, nr = mirror.half_width, mirror.index
    k = [slab_eigen_wavenumber(i, L, 0.0, M, nr) for i in (j - 1, j, j + 1)]
    return 1 if k[2] - k[1] < k[1] - k[0] else -1


def track_slab_branch(L: float, mirror: SlabMirror, j: int, delta_L, max_halvings: int = 30):
    """Follow mode j along a dL grid by continuation.

    Each step is checked against half the local mode spacing; a larger jump
    triggers step halving so no crossing is stepped over.
    """
    M, nr = mirror.half_width, mirror.index
    grid = np.asarray(delta_L, dtype=float)
    out = np.empty_like(grid)
    prev_dL = grid[0]
    prev_k = slab_eigen_wavenumber(j, L, prev_dL, M, nr)
    out[0] = prev_k
    for i in range(1, len(grid)):
        target = grid[i]
        d = prev_dL
        k = prev_k
        step = target - d
        halvings = 0
        while d != target:
            trial = d + step if abs(step) < abs(target - d) else target
            kt = slab_eigen_wavenumber(j, L, trial, M, nr)
            spacing = np.pi / (L - 2 * M + 2 * M * nr)
            if abs(kt - k) > 0.5 * spacing:
                halvings += 1
                if halvings > max_halvings:
                    raise SolverError(f"continuation stalled at dL={d}", (k, kt))
                step *= 0.5
                continue
            d, k = trial, kt
        out[i] = k
        prev_dL, prev_k = target, k
    return out


# ---------------------------------------------------------------- waveguide

def solve_waveguide_pair(L: float, n0: float, eta: float, alpha: float, n: int,
                         tol: float = 1e-12) -> ModeBranchPair:
    """Crossing n of two waveguides of length L/2 with indices n0 +- eta."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if n0 < 1 or abs(eta) >= n0:
        raise DomainError("need n0 >= 1 and |eta| < n0")
    Lp, dLp, ap = n0 * L, eta * L, alpha / n0
    if eta == 0.0:
        k_odd = 2 * np.pi * n / Lp
    else:
        k_odd = delta_eigen_wavenumber(2 * n, Lp, dLp, ap)
    k_even = delta_eigen_wavenumber(2 * n + 1, Lp, dLp, ap)
    r_e = float(waveguide_residual(k_even, L, n0, eta, alpha))
    r_o = float(waveguide_residual(k_odd, L, n0, eta, alpha))
    _check(r_e, tol, k_even * Lp, f"waveguide even root n={n}")
    _check(r_o, tol, k_odd * Lp, f"waveguide odd root n={n}")
    return ModeBranchPair(n, k_even, k_odd, r_e, r_o, eta)


def required_index_swing(L: float, wavelength: float) -> float:
    """Index change eta giving k * eta * L = pi, enough for complete transfer."""
    return wavelength / (2 * L)


# ---------------------------------------------------------------- sweeps

def _pair_at(L, mirror, n, dL, tol):
    geom = CavityGeometry(L, dL)
    if isinstance(mirror, SlabMirror):
        return solve_finite_mirror_pair(geom, mirror, n, tol)
    return solve_global_pair(geom, mirror, n, tol)


def _sweep_point(args):
    L, mirror, ns, dL, tol = args
    return [_pair_at(L, mirror, n, dL, tol) for n in ns]


def sweep_spectrum(L: float, delta_L, mirror, n_range, tol: float = 1e-12, executor=None) -> SpectrumTable:
    """Global and localized wave numbers over a displacement grid.

    ``delta_L`` is an array of displacements (or a single value). Branches
    keep their index-based labels across the grid, so there is no
    relabelling between neighbouring points. ``executor`` may be any object
    with an ordered ``map`` (e.g. a process pool).
    """
    grid = np.atleast_1d(np.asarray(delta_L, dtype=float))
    ns = [int(n) for n in n_range]
    tasks = [(L, mirror, ns, float(d), tol) for d in grid]
    mapper = executor.map if executor is not None else map
    results = []
    for d, pairs in zip(grid, mapper(_sweep_point, tasks)):
        results.append(pairs)
    rows = []
    flat_pairs = []
    for d, pairs in zip(grid, results):
        geom = CavityGeometry(L, d)
        for p in pairs:
            flat_pairs.append(p)
            if isinstance(mirror, SlabMirror):
                Le = L - 2 * mirror.half_width
                kl, kr = localized_wavenumbers(CavityGeometry(Le, d), p.n)
            else:
                kl, kr = localized_wavenumbers(geom, p.n)
            rows += [(d, p.n, 0, p.k_even, p.residual_even), (d, p.n, 1, p.k_odd, p.residual_odd),
                     (d, p.n, 2, kl, 0.0), (d, p.n, 3, kr, 0.0)]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return SpectrumTable(
        delta_L=arr[:, 0], n=arr[:, 1].astype(int),
        branch=np.array([BRANCH_ORDER[int(b)] for b in arr[:, 2]]),
        k=arr[:, 3], residual=arr[:, 4], pairs=flat_pairs,
    )
