#!/usr/bin/env python3
"""
Phase diffusion between gain-switched pulses.

The linearized phase variance grows at R_sp (1 + alpha^2) / (2 s); its
integral over one inter-pulse interval lower-bounds the phase randomization.
Per-pulse phases are drawn from a Gaussian of that accumulated variance.
"""

import math
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from core.errors import ValidationError
from core.seeding import substream
from laser.params import LaserParams, Trajectory

# Series terms smaller than this are dropped from the wrapped Gaussian
WRAP_TERM_CUTOFF = 1e-18
UNIFORMITY_GRID_POINTS = 4096
FULL_RANDOMIZATION_VARIANCE = (2.0 * math.pi) ** 2


class ZeroPhotonError(ValidationError):
    """Raised when the diffusion integrand divides by an empty cavity"""
    pass


def phase_diffusion_rate(photons: np.ndarray, spont_rate: np.ndarray, alpha: float,
                         photon_floor: float) -> np.ndarray:
    """d<dtheta^2>/dt = R_sp (1 + alpha^2) / (2 s), with s floored."""
    floored = np.maximum(photons, photon_floor)
    return spont_rate * (1.0 + alpha * alpha) / (2.0 * floored)


def cumulative_phase_variance(times: np.ndarray, rate: np.ndarray) -> np.ndarray:
    """Trapezoidal running integral on the trajectory grid, starting at 0."""
    return cumulative_trapezoid(rate, times, initial=0.0)


def accumulate_phase_variance(traj: Trajectory, params: LaserParams, t_start: float, t_end: float,
                              photon_floor: Optional[float] = None) -> float:
    """Integral of R_sp (1 + alpha^2) / (2 s) over [t_start, t_end], in rad^2.

    Uses the trajectory's own time grid; endpoints between samples are
    linearly interpolated on the running integral, so adjacent intervals add
    exactly.
    """
    times = traj.times
    span_tol = 1e-12 * max(abs(times[-1]), traj.dt)
    if not t_start < t_end:
        raise ValidationError(f"need t_start < t_end (got {t_start:.6g}, {t_end:.6g})")
    if t_start < times[0] - span_tol or t_end > times[-1] + span_tol:
        raise ValidationError(
            f"interval [{t_start:.6g}, {t_end:.6g}] outside trajectory [{times[0]:.6g}, {times[-1]:.6g}]"
        )
    floor = params.photon_floor if photon_floor is None else photon_floor

    lo = max(int(np.searchsorted(times, t_start, side="right")) - 1, 0)
    hi = min(int(np.searchsorted(times, t_end, side="left")) + 1, times.size)
    if floor <= 0 and np.any(traj.photons[lo:hi] <= 0):
        raise ZeroPhotonError(
            f"s(t) = 0 inside [{t_start:.6g}, {t_end:.6g}] and no photon floor configured"
        )

    rate = phase_diffusion_rate(traj.photons, traj.spont_rate, params.linewidth_enhancement, floor)
    running = cumulative_phase_variance(times, rate)
    t_start = min(max(t_start, times[0]), times[-1])
    t_end = min(max(t_end, times[0]), times[-1])
    return float(np.interp(t_end, times, running) - np.interp(t_start, times, running))


def wrapped_gaussian_density(theta: np.ndarray, variance: float,
                             cutoff: float = WRAP_TERM_CUTOFF) -> np.ndarray:
    """Sum over s = +-1 and integer n of G(s*theta + 2*pi*n) on [0, pi)."""
    if not variance > 0:
        raise ValidationError("variance must be positive")
    theta = np.asarray(theta, dtype=float)
    norm = 1.0 / math.sqrt(2.0 * math.pi * variance)

    def gaussian(x: np.ndarray) -> np.ndarray:
        return norm * np.exp(-x * x / (2.0 * variance))

    total = gaussian(theta) + gaussian(-theta)
    n = 1
    while True:
        terms = [gaussian(sign * theta + shift)
                 for sign in (1.0, -1.0) for shift in (2.0 * math.pi * n, -2.0 * math.pi * n)]
        for term in terms:
            total = total + term
        if max(float(np.max(term)) for term in terms) < cutoff:
            break
        n += 1
    return total


def wrapped_gaussian_uniformity_error(variance: float, grid_points: int = UNIFORMITY_GRID_POINTS,
                                      cutoff: float = WRAP_TERM_CUTOFF) -> float:
    """max over theta in [0, pi) of |G_pi(theta) - 1/pi| * pi."""
    theta = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    density = wrapped_gaussian_density(theta, variance, cutoff)
    return float(np.max(np.abs(density - 1.0 / math.pi)) * math.pi)


def sample_pulse_phases(variance: float, count: int, seed: Optional[int] = None,
                        rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """N independent zero-mean Gaussian phases of the given variance."""
    if not variance > 0:
        raise ValidationError("phase variance must be positive")
    if count < 0:
        raise ValidationError("phase count must be non-negative")
    if rng is None:
        rng = substream(seed if seed is not None else 0, "phases")
    return rng.normal(0.0, math.sqrt(variance), size=int(count))
