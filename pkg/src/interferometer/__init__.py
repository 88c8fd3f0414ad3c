"""Interferometer, detection and ADC model for pdqrng"""

from .model import (
    ArmStatistics, InterferometerConfig, LengthMismatchError, PulseRecord, PulseRecords, VisibilityEstimate,
    arm_powers, arm_statistics, estimate_visibility, interfere_pulse_train, sample_arm_powers,
    simulate_pulse_records,
)
from .adc import AdcConfig, bin_centres, digitize, sample_and_digitize, write_pulse_csv

__all__ = [
    "ArmStatistics", "InterferometerConfig", "LengthMismatchError", "PulseRecord", "PulseRecords",
    "VisibilityEstimate", "arm_powers", "arm_statistics", "estimate_visibility", "interfere_pulse_train",
    "sample_arm_powers", "simulate_pulse_records",
    "AdcConfig", "bin_centres", "digitize", "sample_and_digitize", "write_pulse_csv",
]
