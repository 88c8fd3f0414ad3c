"""Gain-switched laser dynamics and phase diffusion for pdqrng"""

from .params import DriveWaveform, LaserConfigError, LaserParams, PulseTrain, SteadyState, Trajectory
from .dynamics import (
    IntegrationDivergedError, NoSolutionError, PulseMetrics, filtered_power, initial_state,
    integrate_rate_equations, low_pass_filter, pulse_metrics, reverse_bias_fraction, simulate_periodic,
    steady_state_near_threshold, steady_state_residuals, threshold_current,
)
from .diffusion import (
    ZeroPhotonError, accumulate_phase_variance, sample_pulse_phases, wrapped_gaussian_uniformity_error,
)
from .pulses import build_pulse_train, read_trajectory_csv, write_trajectory_csv
from .fitting import FitSettings, InfeasibleFitError, ObservedTrace, fit_parameters, load_observed_power

__all__ = [
    "DriveWaveform", "LaserConfigError", "LaserParams", "PulseTrain", "SteadyState", "Trajectory",
    "IntegrationDivergedError", "NoSolutionError", "PulseMetrics", "filtered_power", "initial_state",
    "integrate_rate_equations", "low_pass_filter", "pulse_metrics", "reverse_bias_fraction",
    "simulate_periodic", "steady_state_near_threshold", "steady_state_residuals", "threshold_current",
    "ZeroPhotonError", "accumulate_phase_variance", "sample_pulse_phases", "wrapped_gaussian_uniformity_error",
    "build_pulse_train", "read_trajectory_csv", "write_trajectory_csv",
    "FitSettings", "InfeasibleFitError", "ObservedTrace", "fit_parameters", "load_observed_power",
]
