"""Single-pass transmission of the central mirror models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainError


@dataclass(frozen=True)
class TransmissionResult:
    """Amplitude t, intensity T = 1 - R and arg(t).

    ``phase`` is continuous in k from k = 0; ``phase_mod`` wraps it into (-pi, pi].
    ``T_approx`` is set only by the interdielectric model.
    """

    t: complex
    T: float
    R: float
    phase: float
    T_approx: float | None = None

    @property
    def phase_mod(self):
        return np.angle(np.exp(1j * np.asarray(self.phase)))


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def delta_transmission(k, alpha) -> TransmissionResult:
    """t = 1/(1 - i k alpha/2)."""
    k, alpha = np.asarray(k, dtype=float), np.asarray(alpha, dtype=float)
    if np.any(k <= 0) or np.any(alpha < 0):
        raise DomainError("need k > 0 and alpha >= 0")
    x = 0.25 * (k * alpha) ** 2
    t = 1.0 / (1 - 0.5j * k * alpha)
    return TransmissionResult(_out(t), _out(1 / (1 + x)), _out(x / (1 + x)), _out(np.arctan(0.5 * k * alpha)))


def slab_transmission(k, M, n_r) -> TransmissionResult:
    """Dielectric slab of half width M and index n_r, a Fabry-Perot etalon."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0) or not M > 0 or not n_r > 1:
        raise DomainError("need k > 0, M > 0, n_r > 1")
    th = 2 * M * k * n_r
    a = (n_r**2 + 1) / (2 * n_r)
    t = np.exp(-2j * M * k) / (np.cos(th) - 1j * a * np.sin(th))
    x = ((n_r**2 - 1) ** 2 / (4 * n_r**2)) * np.sin(th) ** 2
    # arctan(a tan th) taken on the branch that is continuous from th = 0
    turns = np.floor(th / np.pi + 0.5)
    phase = np.arctan(a * np.tan(th - turns * np.pi)) + turns * np.pi - 2 * M * k
    return TransmissionResult(_out(t), _out(1 / (1 + x)), _out(x / (1 + x)), _out(phase))


def thin_slab_alpha(M: float, n_r: float) -> float:
    """Delta strength equivalent to a thin slab, 2 M n_r^2."""
    if not M > 0 or not n_r >= 1:
        raise DomainError("need M > 0 and n_r >= 1")
    return 2 * M * n_r**2


def thin_slab_parameter(k, M: float, n_r: float):
    """2 M k n_r; the thin-slab identification needs it well below pi."""
    return 2 * M * np.asarray(k) * n_r


def transmission_match_residual(k, alpha, M, n_r):
    """k^2 alpha^2 - ((n_r^2 - 1)^2/n_r^2) sin^2(2 M k n_r); zero when the two T agree."""
    k = np.asarray(k, dtype=float)
    return _out((k * alpha) ** 2 - ((n_r**2 - 1) ** 2 / n_r**2) * np.sin(2 * M * k * n_r) ** 2)


def matched_alpha(k, M: float, n_r: float):
    """Delta strength with the same transmission as the slab at wave number k."""
    k = np.asarray(k, dtype=float)
    return _out(((n_r**2 - 1) / n_r) * np.abs(np.sin(2 * M * k * n_r)) / k)


def resonance_wavenumbers(M: float, n_r: float, l_max: int) -> np.ndarray:
    """k_l = l pi/(2 M n_r), l = 1..l_max, where the slab is fully transmitting."""
    if l_max < 1:
        raise DomainError("l_max must be >= 1")
    return np.arange(1, l_max + 1) * np.pi / (2 * M * n_r)


def interdielectric_delta_transmission(k, alpha, n1: float, n2: float) -> TransmissionResult:
    """Delta mirror between media n1 (incident side) and n2.

    t = 2 n1/(n1 + n2 - i k alpha). The transmitted intensity carries the
    flux factor n2/n1, so T = 4 n1 n2/((n1 + n2)^2 + k^2 alpha^2) and
    T + R = 1. ``T_approx`` is the small-contrast form with n0 = (n1 + n2)/2.
    """
    k, alpha = np.asarray(k, dtype=float), np.asarray(alpha, dtype=float)
    if not (n1 >= 1 and n2 >= 1):
        raise DomainError("indices must be >= 1")
    if np.any(k <= 0) or np.any(alpha < 0):
        raise DomainError("need k > 0 and alpha >= 0")
    ka = k * alpha
    den = (n1 + n2) ** 2 + ka**2
    T = 4 * n1 * n2 / den
    R = ((n1 - n2) ** 2 + ka**2) / den
    n0 = 0.5 * (n1 + n2)
    t = 2 * n1 / (n1 + n2 - 1j * ka)
    return TransmissionResult(_out(t), _out(T), _out(R), _out(np.arctan2(ka, n1 + n2)),
                              _out(1 / (1 + ka**2 / (4 * n0**2))))
