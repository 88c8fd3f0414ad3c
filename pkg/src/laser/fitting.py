#!/usr/bin/env python3
"""
Recursive device-parameter fit against an observed power trace.

For every (s_sat, L) candidate:
  1. solve the threshold steady state for n_th and R0,
  2. take the largest G_N whose filtered simulated power stays at or above
     the observed power at every sample,
  3. score the candidate by the RMS deviation at that G_N.
The candidate with the lowest RMS wins.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from core.errors import ValidationError
from core.formats import read_columns
from core.logger import log_info, log_warning
from laser.dynamics import NoSolutionError, filtered_power, simulate_periodic, steady_state_near_threshold
from laser.params import DriveWaveform, LaserConfigError, LaserParams

OBSERVED_HEADER = ("time_s", "power_w")


class InfeasibleFitError(ValidationError):
    """Raised when no candidate admits a conservative envelope"""
    pass


@dataclass(frozen=True)
class ObservedTrace:
    times: np.ndarray    # s, arbitrary origin
    power: np.ndarray    # W

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class FitSettings:
    threshold_current: float = 10e-3       # I_th' (A)
    threshold_power: float = 0.3e-3        # power measured at I_th' (W)
    bandwidth: float = 12.5e9              # detector bandwidth (Hz)
    photodiode_bandwidth: float = 0.0      # Hz, 0 for none
    warmup_periods: int = 20               # periods simulated before the trace is compared
    s_sat_grid: Tuple[float, ...] = ()     # empty: logspace(1e4, 1e7, 30) plus initial_s_sat
    gain_grid_points: int = 12
    bisection_steps: int = 24
    margin_tolerance: float = 1e-3         # fraction of the observed peak
    workers: int = 1


@dataclass(frozen=True)
class FitCandidate:
    cavity_length: float
    photon_saturation: float
    feasible: bool
    gain_per_carrier: float = float("nan")
    margin: float = float("nan")
    rms: float = float("nan")
    params: Optional[LaserParams] = field(default=None, compare=False)
    reason: str = ""


def load_observed_power(path: str) -> ObservedTrace:
    """Two-column `time_s,power_w` CSV."""
    cols = read_columns(path, OBSERVED_HEADER)
    times, power = cols["time_s"], cols["power_w"]
    if times.size < 2:
        raise ValidationError(f"{path}: observed trace needs at least two samples")
    if np.any(np.diff(times) <= 0):
        raise ValidationError(f"{path}: times must be strictly increasing")
    return ObservedTrace(times=times, power=power)


def default_s_sat_grid(initial_s_sat: float, low: float = 1e4, high: float = 1e7, points: int = 30) -> Tuple[float, ...]:
    grid = set(np.logspace(math.log10(low), math.log10(high), points).tolist())
    grid.add(float(initial_s_sat))
    return tuple(sorted(grid))


def _candidate_params(template: LaserParams, cavity_length: float, s_sat: float, carriers_threshold: float,
                      spont_coupling: float, gain: float) -> LaserParams:
    return LaserParams.build(
        cavity_length=cavity_length, carriers_threshold=carriers_threshold, spont_coupling=spont_coupling,
        photon_saturation=s_sat, gain_per_carrier=gain, carrier_decay=template.carrier_decay,
        linewidth_enhancement=template.linewidth_enhancement, effective_index=template.effective_index,
        scatter_loss=template.scatter_loss, wavelength=template.wavelength, photon_floor=template.photon_floor,
    )


def _simulated_envelope(params: LaserParams, drive: DriveWaveform, observed: ObservedTrace,
                        settings: FitSettings) -> np.ndarray:
    offset = settings.warmup_periods * drive.period
    duration = offset + observed.span + 2.0 * drive.dt
    traj = simulate_periodic(params, drive, duration=duration)
    envelope = filtered_power(traj, settings.bandwidth, settings.photodiode_bandwidth)
    return np.interp(offset + (observed.times - observed.times[0]), traj.times, envelope)


def envelope_margin(params: LaserParams, drive: DriveWaveform, observed: ObservedTrace,
                    settings: FitSettings) -> Tuple[float, float]:
    """(min(sim - obs) / max(obs), rms(sim - obs)) for one parameter set."""
    sim = _simulated_envelope(params, drive, observed, settings)
    diff = sim - observed.power
    scale = float(np.max(np.abs(observed.power))) or 1.0
    return float(np.min(diff)) / scale, float(np.sqrt(np.mean(diff * diff)))


def evaluate_candidate(template: LaserParams, drive: DriveWaveform, observed: ObservedTrace,
                       cavity_length: float, s_sat: float, settings: FitSettings) -> FitCandidate:
    """Steps 1-3 for one (s_sat, L) pair; failures come back as infeasible candidates."""
    try:
        partial = _candidate_params(template, cavity_length, s_sat, template.carriers_threshold,
                                    template.spont_coupling, template.gain_per_carrier)
    except LaserConfigError:
        # The template's G_N may not fit this cavity; any admissible gain will do for step 1
        gamma = _candidate_params(template, cavity_length, s_sat, template.carriers_threshold,
                                  template.spont_coupling, 1e12).cavity_decay
        partial = _candidate_params(template, cavity_length, s_sat, template.carriers_threshold,
                                    template.spont_coupling, 2.0 * gamma / template.carriers_threshold)
    try:
        steady = steady_state_near_threshold(settings.threshold_current, settings.threshold_power, partial)
    except NoSolutionError as e:
        return FitCandidate(cavity_length, s_sat, feasible=False, reason=str(e))

    n_th, r0 = steady.carriers_threshold, steady.spont_coupling
    gamma = partial.cavity_decay
    log_g_low = math.log(1.05 * gamma / n_th)      # n0 just below n_th
    log_g_high = math.log(gamma / (0.02 * n_th))   # n0 = 0.98 n_th

    def margin_at(log_g: float) -> Tuple[float, float, LaserParams]:
        params = _candidate_params(template, cavity_length, s_sat, n_th, r0, math.exp(log_g))
        margin, rms = envelope_margin(params, drive, observed, settings)
        return margin, rms, params

    tol = -settings.margin_tolerance
    grid = np.linspace(log_g_low, log_g_high, settings.gain_grid_points)
    margins = [margin_at(g)[0] for g in grid]
    feasible_idx = [i for i, m in enumerate(margins) if m >= tol]

    if feasible_idx:
        best = feasible_idx[-1]
        lo = float(grid[best])
    else:
        # No grid point is conservative: refine around the least-violating one
        best = int(np.argmax(margins))
        bounds = (float(grid[max(best - 1, 0)]), float(grid[min(best + 1, grid.size - 1)]))
        found = minimize_scalar(lambda g: -margin_at(g)[0], bounds=bounds, method="bounded",
                                options={"xatol": 1e-5})
        if -found.fun < tol:
            return FitCandidate(cavity_length, s_sat, feasible=False, margin=float(-found.fun),
                                reason=f"best envelope margin {-found.fun:.3g} below {tol:g}")
        lo = float(found.x)

    above = [float(g) for g in grid if g > lo]
    if above:
        hi = above[0]
        if margin_at(hi)[0] < tol:
            for _ in range(settings.bisection_steps):
                mid = 0.5 * (lo + hi)
                if margin_at(mid)[0] >= tol:
                    lo = mid
                else:
                    hi = mid

    margin, rms, params = margin_at(lo)
    params = replace(params, provenance={
        **params.provenance,
        "carriers_threshold": f"steady state at I={settings.threshold_current:g}A, P={settings.threshold_power:g}W",
        "spont_coupling": f"steady state at I={settings.threshold_current:g}A, P={settings.threshold_power:g}W",
        "gain_per_carrier": "maximal G_N with simulated envelope >= observed",
        "photon_saturation": "fit candidate",
        "cavity_length": "fit candidate",
    })
    return FitCandidate(cavity_length, s_sat, feasible=True, gain_per_carrier=params.gain_per_carrier,
                        margin=margin, rms=rms, params=params)


def _evaluate_packed(args) -> FitCandidate:
    return evaluate_candidate(*args)


def evaluate_candidates(template: LaserParams, drive: DriveWaveform, observed: ObservedTrace,
                        candidates_L: Sequence[float], s_sat_grid: Sequence[float],
                        settings: FitSettings) -> List[FitCandidate]:
    jobs = [(template, drive, observed, length, s_sat, settings) for length in candidates_L for s_sat in s_sat_grid]
    if settings.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            return list(pool.map(_evaluate_packed, jobs))
    return [_evaluate_packed(job) for job in jobs]


def fit_parameters(observed: ObservedTrace, candidates_L: Sequence[float], initial_s_sat: float,
                   drive: DriveWaveform, template: LaserParams,
                   settings: FitSettings = FitSettings()) -> LaserParams:
    """Best-RMS conservative parameter set over the (s_sat, L) candidates."""
    if not candidates_L:
        raise ValidationError("candidates_L must not be empty")
    if observed.span < 2.0 * drive.period:
        raise ValidationError(
            f"observed trace spans {observed.span:.4g}s; at least two drive periods ({2.0 * drive.period:.4g}s) needed"
        )
    drive.validate()
    s_sat_grid = settings.s_sat_grid or default_s_sat_grid(initial_s_sat)

    results = evaluate_candidates(template, drive, observed, candidates_L, s_sat_grid, settings)
    feasible = [c for c in results if c.feasible]
    for c in results:
        if not c.feasible:
            log_warning(
                f"Infeasible candidate L={c.cavity_length * 1e6:.0f}um s_sat={c.photon_saturation:.3g}: {c.reason}",
                component="fit",
            )
    if not feasible:
        raise InfeasibleFitError(f"no G_N keeps the simulated envelope above the observed trace "
                                 f"({len(results)} candidates tried)")
    best = min(feasible, key=lambda c: c.rms)
    log_info(
        f"Selected L={best.cavity_length * 1e6:.0f}um s_sat={best.photon_saturation:.4g} "
        f"G_N={best.gain_per_carrier:.5g} (rms={best.rms:.4g}W, margin={best.margin:.3g}) "
        f"from {len(feasible)}/{len(results)} feasible candidates",
        component="fit",
    )
    return best.params
