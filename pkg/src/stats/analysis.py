#!/usr/bin/env python3
"""
Raw-signal diagnostics: normalized autocorrelation and per-symbol deviation
from the uniform distribution.
"""

import math
from dataclasses import dataclass

import numpy as np

from core.errors import ValidationError


class DegenerateInputError(ValidationError):
    """Raised when a statistic is undefined for the input (zero variance)"""
    pass


def autocorrelation(samples: np.ndarray, max_lag: int, include_zero: bool = False) -> np.ndarray:
    """r(k) for k = 1..max_lag (k = 0..max_lag with include_zero)."""
    x = np.asarray(samples, dtype=float)
    if not 1 <= max_lag < x.size:
        raise ValidationError(f"need N > max_lag >= 1 (N={x.size}, max_lag={max_lag})")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0:
        raise DegenerateInputError("autocorrelation of a constant sequence is undefined")
    r = np.array([np.dot(d[:-k], d[k:]) / denom for k in range(1, max_lag + 1)])
    return np.concatenate(([1.0], r)) if include_zero else r


def autocorrelation_floor_db(r: np.ndarray) -> float:
    """Largest |r(k)| as a power ratio in dB (-40 dB is |r| = 1e-4)."""
    peak = float(np.max(np.abs(r)))
    return 10.0 * math.log10(peak) if peak > 0 else float("-inf")


@dataclass(frozen=True)
class UniformityDeviation:
    deviation: np.ndarray    # P_i - 2^-k per symbol
    sigma: float             # one-sigma multinomial band
    count: int


def uniformity_deviation(symbols: np.ndarray, k: int) -> UniformityDeviation:
    symbols = np.asarray(symbols, dtype=np.int64)
    levels = 1 << k
    if symbols.size < levels:
        raise ValidationError(f"need at least {levels} symbols for {k}-bit uniformity (got {symbols.size})")
    if symbols.min() < 0 or symbols.max() >= levels:
        raise ValidationError(f"symbols must lie in [0, {levels})")
    p = 1.0 / levels
    freq = np.bincount(symbols, minlength=levels) / symbols.size
    return UniformityDeviation(deviation=freq - p, sigma=math.sqrt(p * (1.0 - p) / symbols.size),
                               count=int(symbols.size))
