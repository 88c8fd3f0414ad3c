#!/usr/bin/env python3
"""
Detector sampling and digitization.
One sample per pulse, mapped onto a 0-anchored grid of 2^b bins.
"""

from dataclasses import dataclass

import numpy as np

from core.errors import ValidationError
from core.formats import write_columns
from interferometer.model import PulseRecords

PULSE_HEADER = ("j", "u1_w", "u2_w", "theta_rad", "uout_w", "bin")
# Sample codes are stored as 16-bit words
MAX_RESOLUTION = 16


@dataclass(frozen=True)
class AdcConfig:
    resolution: int = 14              # b
    dynamic_range: float = 5e-3       # A_ADC (W)
    noise_variance: float = 1.45e-10  # var(u_noise) (W^2)
    sample_offset: float = 13e-12     # s after the pulse peak

    @property
    def levels(self) -> int:
        return 1 << self.resolution

    @property
    def bin_size(self) -> float:
        return self.dynamic_range / self.levels

    def validate(self) -> None:
        if not 1 <= self.resolution <= MAX_RESOLUTION:
            raise ValidationError(f"ADC resolution must lie in [1, {MAX_RESOLUTION}] bits (got {self.resolution})")
        if not self.dynamic_range > 0:
            raise ValidationError("ADC dynamic range must be positive")
        if self.noise_variance < 0:
            raise ValidationError("noise variance must be non-negative")


def digitize(power: np.ndarray, adc: AdcConfig) -> np.ndarray:
    """floor(u / du), clamped to [0, 2^b - 1]."""
    codes = np.floor(np.asarray(power, dtype=float) / adc.bin_size)
    return np.clip(codes, 0, adc.levels - 1).astype(np.int64)


def sample_and_digitize(records: PulseRecords, adc: AdcConfig) -> np.ndarray:
    adc.validate()
    return digitize(records.u_out, adc)


def bin_centres(bins: np.ndarray, adc: AdcConfig) -> np.ndarray:
    """Power at the middle of each code's bin."""
    return (np.asarray(bins, dtype=float) + 0.5) * adc.bin_size


def write_pulse_csv(path: str, records: PulseRecords, bins: np.ndarray) -> str:
    if len(records) != np.asarray(bins).size:
        raise ValidationError("one bin per pulse record required")
    return write_columns(
        path, PULSE_HEADER,
        [records.index, records.u1, records.u2, records.theta, records.u_out, bins],
        formats=["%d", "%.17g", "%.17g", "%.17g", "%.17g", "%d"],
    )
