"""Diabatic amplitude dynamics through a linearly swept avoided crossing.

Time is tau = gap*t/hbar, the diabatic energy is E = gap*theta_tilde*tau/2
and r = gap/(hbar*omega_av). Second-order runs are carried in the rotated
amplitudes A~ = A*exp(i*Phi), Phi = integral of beta from tau0, so the
integrator only sees the slow envelope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expi

from .model import HBAR, DomainError

DEFAULT_WINDOW = (-25.0, 25.0)


class IntegrationError(RuntimeError):
    """Integrator gave up; ``tau`` is the last point it reached."""

    def __init__(self, msg: str, tau: float, params: dict | None = None):
        super().__init__(f"{msg} (last good tau = {tau:.6g}, params = {params})")
        self.tau = tau
        self.params = params or {}


@dataclass(frozen=True)
class SweepSchedule:
    """Linear ramp E(tau) = theta_tilde*tau/2 in gap units."""

    theta_tilde: float

    @classmethod
    def from_speed(cls, v: float, gap: float, curvature: float) -> "SweepSchedule":
        # dL = 2 v t, E = sqrt(curvature) dL, so theta = 2 dE/dt = 4 v sqrt(curvature)
        return cls(HBAR * 4.0 * v * np.sqrt(curvature) / gap**2)

    def energy(self, tau):
        return 0.5 * self.theta_tilde * np.asarray(tau)


@dataclass
class AmplitudeTrajectory:
    tau: np.ndarray
    A_L: np.ndarray
    A_R: np.ndarray
    order: str
    params: dict = field(default_factory=dict)
    dA_L: np.ndarray | None = None
    dA_R: np.ndarray | None = None
    frame: str = "rotated"

    @property
    def populations(self):
        return np.abs(self.A_L) ** 2, np.abs(self.A_R) ** 2

    @property
    def normsq(self) -> np.ndarray:
        pL, pR = self.populations
        return pL + pR

    @property
    def energy_deviation(self) -> np.ndarray:
        return self.normsq - 1.0

    def rows(self):
        dev = self.energy_deviation
        for i, t in enumerate(self.tau):
            yield t, self.A_L[i], self.A_R[i], dev[i] + 1.0, dev[i]


# -- closed forms ---------------------------------------------------------

def lz_probability(gap: float, sweep_rate: float, with_flag: bool = False):
    """exp(-2 pi gap**2/(hbar*theta)). A static mirror returns 0, flagged."""
    if gap < 0 or sweep_rate < 0:
        raise DomainError("gap and sweep rate must be non-negative")
    static = sweep_rate == 0
    if static:
        p = 0.0 if gap > 0 else 1.0
    else:
        p = float(np.exp(-2 * np.pi * gap**2 / (HBAR * sweep_rate)))
    return (p, static) if with_flag else p


def lz_probability_scaled(theta_tilde: float) -> float:
    if theta_tilde < 0:
        raise DomainError("theta_tilde must be non-negative")
    return 0.0 if theta_tilde == 0 else float(np.exp(-2 * np.pi / theta_tilde))


@dataclass(frozen=True)
class BetaFrequencies:
    beta_L: float
    beta_R: float
    difference: float
    beta_error: float        # largest |beta - omega_av|
    difference_error: float  # hbar*(beta_R - beta_L) - 2E, in J


def beta_frequencies(E: float, gap: float, omega_av: float) -> BetaFrequencies:
    if not omega_av > 0:
        raise DomainError("omega_av must be positive")
    e, d = E / HBAR, gap / HBAR
    bL = np.hypot(e - omega_av, d)
    bR = np.hypot(e + omega_av, d)
    # difference via a product form, free of the cancellation in bR - bL
    diff = 4 * e * omega_av / (bL + bR)
    err = max(abs(bL - omega_av), abs(bR - omega_av))
    return BetaFrequencies(float(bL), float(bR), float(diff), float(err), float(HBAR * diff - 2 * E))


def static_initial_derivatives(E: float, gap: float, omega_av: float, state, hbar: float = HBAR):
    """dA/dt = -i [[omega_av - E/hbar, gap/hbar], [gap/hbar, omega_av + E/hbar]] A."""
    H = np.array([[omega_av - E / hbar, gap / hbar], [gap / hbar, omega_av + E / hbar]])
    return -1j * H @ np.asarray(state, dtype=complex)


def _ei_asymptotic(z, terms=40):
    # e^z/z sum k!/z^k, with e^z/z formed in log space so it does not overflow early
    s, t = np.ones_like(z), np.ones_like(z)
    for k in range(1, terms):
        t = t * k / z
        s = s + t
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.exp(z - np.log(z)) * s
    # keep real arguments real once the value overflows
    v = np.where(z.imag == 0, v.real + 0j, v)
    return v + 1j * np.pi * np.sign(z.imag)


def complex_exponential_integral(z):
    """Principal-branch Ei(z), cut along the negative real axis."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("Ei is singular at z = 0")
    # scipy's expi overflows once Re z passes ~709 even where Ei is still finite
    big = z.real > 700
    out = np.where(big, _ei_asymptotic(np.where(big, z, 701.0)), expi(np.where(big, 1.0, z)))
    return complex(out) if out.ndim == 0 else out


# -- integrators ----------------------------------------------------------

def _grid(tau0, tau1, n_points, t_eval):
    if not tau0 < tau1:
        raise DomainError("need tau0 < tau1")
    return np.linspace(tau0, tau1, n_points) if t_eval is None else np.asarray(t_eval, dtype=float)


def _run(rhs, span, y0, t_eval, method, rtol, atol, params):
    sol = solve_ivp(rhs, span, y0, method=method, rtol=rtol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        last = float(sol.t[-1]) if sol.t.size else span[0]
        raise IntegrationError(sol.message, last, params)
    return sol


def _initial(state0):
    a = np.asarray(state0, dtype=complex)
    if a.shape != (2,):
        raise DomainError("state must be a pair (A_L, A_R)")
    if abs(np.vdot(a, a).real - 1) > 1e-9:
        raise DomainError("initial state must have unit norm")
    return a


def integrate_first_order(theta_tilde: float = 1.0, state0=(1, 0), tau0: float = DEFAULT_WINDOW[0],
                          tau1: float = DEFAULT_WINDOW[1], tol: float = 1e-10, n_points: int = 2001,
                          t_eval=None, method: str = "DOP853") -> AmplitudeTrajectory:
    """i dA~_L/dtau = exp(-i th tau^2/2) A~_R, i dA~_R/dtau = exp(i th tau^2/2) A~_L."""
    th = theta_tilde

    def rhs(t, y):
        ph = np.exp(0.5j * th * t * t)
        return np.array([-1j * y[1] / ph, -1j * y[0] * ph])

    grid = _grid(tau0, tau1, n_points, t_eval)
    params = {"theta_tilde": th, "tau0": tau0, "tau1": tau1, "tol": tol}
    # tighter than tol so the accumulated norm drift stays within 10*tol
    sol = _run(rhs, (tau0, tau1), _initial(state0), grid, method, tol * 0.1, tol * 1e-3, params)
    ph = np.exp(0.5j * th * sol.t**2)
    aL, aR = sol.y
    return AmplitudeTrajectory(sol.t, aL, aR, "first", params, -1j * aR / ph, -1j * aL * ph)


def _F(u):
    return 0.5 * (u * np.sqrt(u * u + 1) + np.arcsinh(u))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _mean_sqrt(a, b):
    """Mean of sqrt(u**2 + 1) over [a, b].

    Short intervals use Gauss-Legendre; the antiderivative difference
    there would cancel badly.
    """
    h = b - a
    short = np.abs(h) < 0.5
    mid = 0.5 * (a + b)
    u = mid[..., None] + 0.5 * h[..., None] * _GL_X
    quad = 0.5 * np.sum(_GL_W * np.sqrt(u * u + 1), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = (_F(b) - _F(a)) / h
    return np.where(short, quad, closed)


def _mean_sqrt_scalar(a, b):
    # scalar twin of _mean_sqrt, called once per right-hand-side evaluation
    h = b - a
    if abs(h) < 0.5:
        u = 0.5 * (a + b) + 0.5 * h * _GL_X
        return 0.5 * float(_GL_W @ np.sqrt(u * u + 1))
    Fa = 0.5 * (a * math.sqrt(a * a + 1) + math.asinh(a))
    Fb = 0.5 * (b * math.sqrt(b * b + 1) + math.asinh(b))
    return (Fb - Fa) / h


def beta_phases(tau, theta_tilde: float, delta_ratio: float, tau0: float):
    """Integrals of beta_L, beta_R (gap units) from tau0 to tau."""
    if np.ndim(tau) == 0:
        t, w = float(tau), 1.0 / delta_ratio
        e, e0 = 0.5 * theta_tilde * t, 0.5 * theta_tilde * tau0
        return (t - tau0) * _mean_sqrt_scalar(e0 - w, e - w), (t - tau0) * _mean_sqrt_scalar(e0 + w, e + w)
    tau = np.asarray(tau, dtype=float)
    w = 1.0 / delta_ratio
    dt = tau - tau0
    e, e0 = 0.5 * theta_tilde * tau, 0.5 * theta_tilde * tau0
    return dt * _mean_sqrt(e0 - w + 0 * e, e - w), dt * _mean_sqrt(e0 + w + 0 * e, e + w)


def integrate_second_order(theta_tilde: float = 1.0, delta_ratio: float = 0.01, state0=(1, 0),
                           tau0: float = DEFAULT_WINDOW[0], tau1: float = DEFAULT_WINDOW[1],
                           tol: float = 1e-10, n_points: int = 2001, t_eval=None,
                           method: str = "DOP853", frame: str = "rotated") -> AmplitudeTrajectory:
    """Two-mode wave equation -A'' = M A with M = H**2 in gap units.

    ``frame="rotated"`` integrates the envelopes A~ (default);
    ``frame="full"`` integrates A itself, which is only practical for
    moderate 1/delta_ratio and serves as a gauge cross-check.
    """
    if not delta_ratio > 0:
        raise DomainError("delta_ratio must be positive")
    th, w = theta_tilde, 1.0 / delta_ratio
    params = {"theta_tilde": th, "delta_ratio": delta_ratio, "tau0": tau0, "tau1": tau1,
              "tol": tol, "frame": frame}
    grid = _grid(tau0, tau1, n_points, t_eval)
    a0 = _initial(state0)
    e0 = 0.5 * th * tau0
    # motion starts at tau0: derivatives from the static first-order form
    d0 = static_initial_derivatives(e0, 1.0, w, a0, hbar=1.0)

    if frame == "full":
        def rhs(t, y):
            e = 0.5 * th * t
            H = np.array([[w - e, 1.0], [1.0, w + e]])
            return np.concatenate([y[2:], -H @ (H @ y[:2])])

        sol = _run(rhs, (tau0, tau1), np.concatenate([a0, d0]), grid, method, tol, tol * 1e-2, params)
        return AmplitudeTrajectory(sol.t, sol.y[0], sol.y[1], "second", params, sol.y[2], sol.y[3], "full")
    if frame != "rotated":
        raise DomainError("frame must be 'rotated' or 'full'")

    def rhs(t, y):
        aL, aR, dL, dR = y
        e = 0.5 * th * t
        bL, bR = np.hypot(e - w, 1.0), np.hypot(e + w, 1.0)
        bLp, bRp = 0.5 * th * (e - w) / bL, 0.5 * th * (e + w) / bR
        pL, pR = beta_phases(t, th, delta_ratio, tau0)
        ph = np.exp(1j * (pL - pR))
        return np.array([dL, dR,
                         2j * bL * dL + 1j * bLp * aL - 2 * w * aR * ph,
                         2j * bR * dR + 1j * bRp * aR - 2 * w * aL / ph])

    bL0, bR0 = np.hypot(e0 - w, 1.0), np.hypot(e0 + w, 1.0)
    y0 = np.array([a0[0], a0[1], d0[0] + 1j * bL0 * a0[0], d0[1] + 1j * bR0 * a0[1]])
    sol = _run(rhs, (tau0, tau1), y0, grid, method, tol, tol * 1e-2, params)
    return AmplitudeTrajectory(sol.t, sol.y[0], sol.y[1], "second", params, sol.y[2], sol.y[3])


def unrotate(traj: AmplitudeTrajectory):
    """Full-phase amplitudes A = A~ exp(-i Phi) of a rotated second-order run."""
    if traj.frame != "rotated" or traj.order != "second":
        raise DomainError("need a rotated second-order trajectory")
    p = traj.params
    pL, pR = beta_phases(traj.tau, p["theta_tilde"], p["delta_ratio"], p["tau0"])
    return traj.A_L * np.exp(-1j * pL), traj.A_R * np.exp(-1j * pR)


@dataclass(frozen=True)
class EnergyDeviation:
    series: np.ndarray
    max_abs: float
    final: float


def energy_deviation(traj: AmplitudeTrajectory) -> EnergyDeviation:
    dev = traj.energy_deviation
    return EnergyDeviation(dev, float(np.max(np.abs(dev))), float(dev[-1]))


def uncoupled_second_order(theta_tilde: float = 1.0, tau0: float = DEFAULT_WINDOW[0],
                           tau1: float = DEFAULT_WINDOW[1], tol: float = 1e-10, state0=(1, 0),
                           n_points: int = 2001, t_eval=None, method: str = "DOP853") -> AmplitudeTrajectory:
    """A~_L'' = -i th tau A~_L' - A~_L and A~_R'' = i th tau A~_R' - A~_R, solved separately."""
    th = theta_tilde
    a0 = _initial(state0)
    grid = _grid(tau0, tau1, n_points, t_eval)
    params = {"theta_tilde": th, "tau0": tau0, "tau1": tau1, "tol": tol}
    ph0 = np.exp(0.5j * th * tau0**2)
    out = []
    for sign, a, d in ((-1, a0[0], -1j * a0[1] / ph0), (1, a0[1], -1j * a0[0] * ph0)):
        def rhs(t, y, s=sign):
            return np.array([y[1], 1j * s * th * t * y[1] - y[0]])
        out.append(_run(rhs, (tau0, tau1), np.array([a, d], dtype=complex), grid, method,
                        tol * 0.1, tol * 1e-3, params))
    L, R = out
    return AmplitudeTrajectory(L.t, L.y[0], R.y[0], "first", params, L.y[1], R.y[1])


def early_time_analytic(theta_tilde: float, tau0: float, tau):
    """Pre-crossing approximation to A~_L for a start in (1, 0) at tau0 < 0."""
    tau = np.asarray(tau, dtype=float)
    if not theta_tilde > 0:
        raise DomainError("theta_tilde must be positive")
    if tau0 >= 0 or np.any(tau >= 0) or np.any(tau < tau0):
        raise DomainError("need tau0 <= tau < 0")
    th = theta_tilde
    ei0 = complex_exponential_integral(-0.5j * th * tau0**2)
    ei = complex_exponential_integral(-0.5j * th * tau**2)
    val = 1 + (1j / th) * np.log(tau / tau0) + (0.5j / th) * np.exp(0.5j * th * tau0**2) * (ei0 - ei)
    return complex(val) if np.ndim(val) == 0 else val


def early_time_derivative(theta_tilde: float, tau0: float, tau):
    tau = np.asarray(tau, dtype=float)
    return (1j / (tau * theta_tilde)) * (1 - np.exp(0.5j * theta_tilde * (tau0**2 - tau**2)))


@dataclass(frozen=True)
class DriftReport:
    drift_scale: float
    ratio: np.ndarray
    min_ratio: float


def diabatic_drift_ratio(v: float, L: float, gap: float, traj: AmplitudeTrajectory) -> DriftReport:
    """Retained |dA~/dtau| against the dropped mode-drift term (v/L)(hbar/gap)|A~|.

    Both sides use the two-component vector norm.
    """
    if traj.dA_L is None:
        raise DomainError("trajectory carries no derivatives")
    scale = (v / L) * (HBAR / gap)
    kept = np.hypot(np.abs(traj.dA_L), np.abs(traj.dA_R))
    dropped = scale * np.sqrt(traj.normsq)
    with np.errstate(divide="ignore"):
        ratio = np.where(dropped > 0, kept / np.where(dropped > 0, dropped, 1.0), np.inf)
    return DriftReport(scale, ratio, float(np.min(ratio)))
