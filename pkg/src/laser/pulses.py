#!/usr/bin/env python3
"""
Pulse-train extraction and trajectory file I/O.
Turns a periodic trajectory into the per-pulse view the interferometer uses.
"""

from typing import Optional

import numpy as np

from core.errors import ValidationError
from core.formats import read_columns, write_columns
from core.logger import log_info
from laser.diffusion import accumulate_phase_variance, sample_pulse_phases
from laser.dynamics import filtered_power
from laser.params import DriveWaveform, LaserParams, PulseTrain, Trajectory

TRAJECTORY_HEADER = ("time_s", "photons", "carriers", "rsp_per_s", "phase_var_rad2", "power_w")


def build_pulse_train(traj: Trajectory, params: LaserParams, drive: DriveWaveform, bandwidth: float,
                      sample_offset: float, count: int, seed: Optional[int] = None,
                      rng: Optional[np.random.Generator] = None,
                      photodiode_bandwidth: float = 0.0) -> PulseTrain:
    """Last full period of the filtered envelope plus `count` sampled phases.

    Every pulse shares the same envelope (the drive is periodic); only the
    phase differs from pulse to pulse.
    """
    period = drive.period
    times = traj.times
    if times[-1] - times[0] < period:
        raise ValidationError("trajectory shorter than one drive period")
    envelope = filtered_power(traj, bandwidth, photodiode_bandwidth)
    start = int(np.searchsorted(times, times[-1] - period))
    window_t = times[start:] - times[start]
    window_p = envelope[start:]

    k = int(np.argmax(window_p))
    peak_time = float(window_t[k])
    sample_time = peak_time + sample_offset
    # A sample past the end of the window lands on the next (identical) pulse
    sample_power = float(np.interp(np.mod(sample_time, period), window_t, window_p, period=period))

    t_end = float(times[-1])
    variance = accumulate_phase_variance(traj, params, t_end - period, t_end)
    log_info(
        f"Phase variance per {period * 1e12:.1f}ps interval: {variance:.4g} rad^2 "
        f"(rms {np.sqrt(variance):.3f} rad; photon_floor={params.photon_floor:g}, "
        f"power_per_photon={params.power_per_photon:.5g}W)",
        component="laser",
    )
    phases = sample_pulse_phases(variance, count, seed=seed, rng=rng)
    return PulseTrain(
        envelope_times=window_t, envelope_power=window_p, peak_time=peak_time,
        sample_time=sample_time, sample_power=sample_power, phase_variance=variance, phases=phases,
    )


def write_trajectory_csv(path: str, traj: Trajectory) -> str:
    return write_columns(path, TRAJECTORY_HEADER, [
        traj.times, traj.photons, traj.carriers, traj.spont_rate, traj.phase_variance, traj.output_power,
    ])


def read_trajectory_csv(path: str) -> Trajectory:
    cols = read_columns(path, TRAJECTORY_HEADER)
    if cols["time_s"].size < 2:
        raise ValidationError(f"{path}: trajectory needs at least two samples")
    return Trajectory(
        times=cols["time_s"], photons=cols["photons"], carriers=cols["carriers"],
        spont_rate=cols["rsp_per_s"], phase_variance=cols["phase_var_rad2"], output_power=cols["power_w"],
    )
