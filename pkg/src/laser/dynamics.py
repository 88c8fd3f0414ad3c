#!/usr/bin/env python3
"""
Gain-switched laser dynamics for pdqrng.

Fixed-step RK4 integration of the coupled photon/carrier rate equations

    ds/dt = G_N [ (n - n0)/sqrt(1 + s/s_sat) - (n_th - n0) ] s + R_sp
    dn/dt = I/q - gamma_e n - G_N (n - n0)/sqrt(1 + s/s_sat) s

with R_sp = n gamma_e R0, plus the steady state near threshold, the detector
filter and pulse-shape metrics.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.signal import lfilter

from core.errors import StageError, ValidationError
from core.logger import log_debug, log_info
from laser.diffusion import cumulative_phase_variance, phase_diffusion_rate
from laser.params import DriveWaveform, LaserParams, SteadyState, Trajectory

# Detector rise-time relation tau_f = 0.35 / bandwidth
RISE_TIME_FACTOR = 0.35


class IntegrationDivergedError(StageError):
    """Raised when the state leaves the finite reals"""

    def __init__(self, time_s: float, detail: str):
        self.time_s = time_s
        super().__init__("laser", RuntimeError(f"integration diverged at t={time_s:.6g}s: {detail}"))


class NoSolutionError(ValidationError):
    """Raised when the threshold steady state has no physical root"""

    def __init__(self, message: str, bracket: Tuple[float, float]):
        self.bracket = bracket
        super().__init__(f"{message} (carrier bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])")


def _derivatives(s: float, n: float, current: float, p: LaserParams) -> Tuple[float, float]:
    saturation = math.sqrt(1.0 + max(s, 0.0) / p.photon_saturation)
    stimulated = p.gain_per_carrier * (n - p.carriers_transparency) / saturation
    threshold_gain = p.gain_per_carrier * (p.carriers_threshold - p.carriers_transparency)
    spontaneous = n * p.carrier_decay * p.spont_coupling
    ds = (stimulated - threshold_gain) * s + spontaneous
    dn = current / p.electron_charge - p.carrier_decay * n - stimulated * s
    return ds, dn


def initial_state(params: LaserParams) -> Tuple[float, float]:
    """Start at threshold carriers with the spontaneous-emission photon level."""
    n = params.carriers_threshold
    s = n * params.carrier_decay * params.spont_coupling / params.cavity_decay
    return max(s, params.photon_floor), n


def integrate_rate_equations(params: LaserParams, drive: DriveWaveform, s_init: float,
                             n_init: float) -> Trajectory:
    """Integrate the rate equations over drive.duration with step drive.dt."""
    if s_init < 0 or n_init < 0:
        raise ValidationError("initial photon and carrier numbers must be non-negative")
    params.validate()
    drive.validate()

    dt = drive.dt
    steps = drive.steps
    times = np.arange(steps + 1) * dt
    currents = drive.current(times)
    half_currents = drive.current(times + 0.5 * dt)
    floor = params.photon_floor

    photons = np.empty(steps + 1)
    carriers = np.empty(steps + 1)
    s = max(float(s_init), floor)
    n = float(n_init)
    photons[0], carriers[0] = s, n

    for k in range(steps):
        i0, ih, i1 = currents[k], half_currents[k], currents[k + 1]
        k1s, k1n = _derivatives(s, n, i0, params)
        k2s, k2n = _derivatives(s + 0.5 * dt * k1s, n + 0.5 * dt * k1n, ih, params)
        k3s, k3n = _derivatives(s + 0.5 * dt * k2s, n + 0.5 * dt * k2n, ih, params)
        k4s, k4n = _derivatives(s + dt * k3s, n + dt * k3n, i1, params)
        s = s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        n = n + dt / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        if not (math.isfinite(s) and math.isfinite(n)):
            raise IntegrationDivergedError(times[k + 1], f"s={s}, n={n}")
        # Reverse bias may extract more carriers than exist; photons keep a vacuum floor
        if n < 0.0:
            n = 0.0
        if s < floor:
            s = floor
        photons[k + 1] = s
        carriers[k + 1] = n

    spont_rate = carriers * params.carrier_decay * params.spont_coupling
    rate = phase_diffusion_rate(photons, spont_rate, params.linewidth_enhancement, floor)
    phase_variance = cumulative_phase_variance(times, rate)
    output_power = params.power_per_photon * photons

    log_debug(
        f"Integrated {steps} RK4 steps (dt={dt:.3g}s): s in [{photons.min():.4g}, {photons.max():.4g}], "
        f"n in [{carriers.min():.4g}, {carriers.max():.4g}]",
        component="laser",
    )
    return Trajectory(
        times=times, photons=photons, carriers=carriers, spont_rate=spont_rate,
        phase_variance=phase_variance, output_power=output_power,
    )


def steady_state_near_threshold(current: float, power_meas: float, params_partial: LaserParams) -> SteadyState:
    """Solve the threshold steady state for (n_th, R0).

    With n = n_th the photon and carrier balance equations read
        gamma (1/sqrt(1 + s/s_sat) - 1) s + R0 gamma_e n_th = 0
        I/q - gamma_e n_th - gamma s / sqrt(1 + s/s_sat)  = 0
    and are solved directly once s is known from the measured power. Only
    gamma, gamma_e, s_sat, q and the power conversion of params_partial are
    used.
    """
    if power_meas <= 0:
        raise ValidationError("measured threshold power must be positive")
    if current <= 0:
        raise ValidationError("threshold current must be positive")
    p = params_partial
    photons = power_meas / p.power_per_photon
    saturation = math.sqrt(1.0 + photons / p.photon_saturation)
    injection = current / p.electron_charge
    carriers = (injection - p.cavity_decay * photons / saturation) / p.carrier_decay
    bracket = (0.0, injection / p.carrier_decay)
    if not carriers > 0.0:
        raise NoSolutionError(
            f"I={current:.4g}A cannot sustain {power_meas:.4g}W ({photons:.4g} photons)", bracket
        )
    spont = p.cavity_decay * (1.0 - 1.0 / saturation) * photons / (p.carrier_decay * carriers)
    log_info(
        f"Threshold steady state: s_th'={photons:.5g} photons from {power_meas:.4g}W "
        f"(power_per_photon={p.power_per_photon:.5g}W) -> n_th={carriers:.5g}, R0={spont:.5g}",
        component="laser",
    )
    return SteadyState(current=current, photons=photons, measured_power=power_meas,
                       carriers_threshold=carriers, spont_coupling=spont)


def steady_state_residuals(state: SteadyState, params: LaserParams) -> Tuple[float, float]:
    """Relative residuals of the two threshold balance equations."""
    saturation = math.sqrt(1.0 + state.photons / params.photon_saturation)
    loss = params.cavity_decay * state.photons
    photon_terms = (loss * (1.0 / saturation - 1.0), state.spont_coupling * params.carrier_decay
                    * state.carriers_threshold)
    carrier_terms = (state.current / params.electron_charge, -params.carrier_decay * state.carriers_threshold,
                     -loss / saturation)
    photon_scale = max(abs(t) for t in photon_terms) or 1.0
    carrier_scale = max(abs(t) for t in carrier_terms) or 1.0
    return sum(photon_terms) / photon_scale, sum(carrier_terms) / carrier_scale


def threshold_current(params: LaserParams) -> float:
    """Current that holds the carriers at n_th without stimulated emission."""
    return params.electron_charge * params.carrier_decay * params.carriers_threshold


def low_pass_filter(signal: np.ndarray, bandwidth: float, dt: float) -> np.ndarray:
    """Causal single-pole recursive filter with tau = 0.35/bandwidth, starting at rest."""
    if bandwidth <= 0 or dt <= 0:
        raise ValidationError("bandwidth and dt must be positive")
    tau = RISE_TIME_FACTOR / bandwidth
    a = 1.0 - math.exp(-dt / tau)
    return lfilter([a], [1.0, a - 1.0], np.asarray(signal, dtype=float))


def filtered_power(traj: Trajectory, bandwidth: float, photodiode_bandwidth: float = 0.0) -> np.ndarray:
    """Detected power: an optional photodiode pole, then the oscilloscope pole."""
    power = traj.output_power
    if photodiode_bandwidth > 0:
        power = low_pass_filter(power, photodiode_bandwidth, traj.dt)
    return low_pass_filter(power, bandwidth, traj.dt)


def reverse_bias_fraction(drive: DriveWaveform, samples: int = 100_000) -> float:
    """Fraction of one drive period during which I(t) < 0."""
    t = np.arange(samples) * (drive.period / samples)
    return float(np.mean(drive.current(t) < 0.0))


@dataclass(frozen=True)
class PulseMetrics:
    peak_power: float     # W
    width: float          # s, full width at half maximum
    peak_time: float      # s, absolute


def pulse_metrics(times: np.ndarray, power: np.ndarray, period: float) -> PulseMetrics:
    """FWHM and peak of the pulse in the last full period of a periodic trace."""
    times = np.asarray(times)
    power = np.asarray(power)
    start = np.searchsorted(times, times[-1] - period)
    window_t = times[start:]
    window_p = power[start:]
    if window_p.size < 3:
        raise ValidationError("trace shorter than one period")
    k = int(np.argmax(window_p))
    peak = float(window_p[k])
    half = 0.5 * peak

    left = k
    while left > 0 and window_p[left] >= half:
        left -= 1
    right = k
    while right < window_p.size - 1 and window_p[right] >= half:
        right += 1
    if window_p[left] >= half or window_p[right] >= half:
        return PulseMetrics(peak_power=peak, width=float("nan"), peak_time=float(window_t[k]))

    def _crossing(i: int, j: int) -> float:
        # linear interpolation between samples i and j straddling half maximum
        return float(window_t[i] + (half - window_p[i]) * (window_t[j] - window_t[i]) / (window_p[j] - window_p[i]))

    t_left = _crossing(left, left + 1)
    t_right = _crossing(right - 1, right)
    return PulseMetrics(peak_power=peak, width=t_right - t_left, peak_time=float(window_t[k]))


def simulate_periodic(params: LaserParams, drive: DriveWaveform,
                      duration: Optional[float] = None) -> Trajectory:
    """Integrate from the threshold initial state (used by fit and pipeline)."""
    if duration is not None:
        drive = replace(drive, duration=duration)
    s0, n0 = initial_state(params)
    return integrate_rate_equations(params, drive, s0, n0)
