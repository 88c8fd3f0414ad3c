#!/usr/bin/env python3
"""
Unbalanced Mach-Zehnder model.

Each pulse interferes with its predecessor:
    u_out = u1 + u2 + 2|g| sqrt(u1 u2) cos(theta_j - theta_{j-1} + dphi) + u_noise
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np

from core.errors import ValidationError
from core.logger import log_debug, log_warning
from core.seeding import substream


class LengthMismatchError(ValidationError):
    """Raised when per-pulse sequences differ in length"""
    pass


@dataclass(frozen=True)
class InterferometerConfig:
    """Couplers are field transmission coefficients; arm means feed the pulse-scalar model."""

    coupler1: Tuple[float, float] = (math.sqrt(0.5), math.sqrt(0.5))   # eps11(1), eps12(1)
    coupler2: Tuple[float, float] = (math.sqrt(0.5), math.sqrt(0.5))   # eps11(2), eps21(2)
    arm_delays: Tuple[float, float] = (0.0, 1.0 / 5.825e9)             # t1, t2 (s)
    static_phase: float = 0.0                                          # dphi (rad)
    visibility: float = 0.9                                            # |g|
    detector_bandwidth: float = 12.5e9                                 # Hz
    photodiode_bandwidth: float = 10e9                                 # Hz, 0 for none
    arm_mean_u1: float = 0.97e-3                                       # W
    arm_mean_u2: float = 0.90e-3                                       # W
    arm_sigma: float = 45e-6                                           # W
    arm_source: str = "config"                                         # "config" or "laser"

    def validate(self, prf: Optional[float] = None) -> None:
        for k, (a, b) in enumerate((self.coupler1, self.coupler2), start=1):
            if a * a + b * b > 1.0 + 1e-12:
                raise ValidationError(f"coupler{k}: |eps|^2 sum {a * a + b * b:.6g} exceeds 1")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValidationError(f"visibility must lie in [0, 1] (got {self.visibility})")
        if self.detector_bandwidth <= 0:
            raise ValidationError("detector_bandwidth must be positive")
        if self.photodiode_bandwidth < 0:
            raise ValidationError("photodiode_bandwidth must be non-negative")
        if self.arm_mean_u1 < 0 or self.arm_mean_u2 < 0 or self.arm_sigma < 0:
            raise ValidationError("arm means and sigma must be non-negative")
        if self.arm_source not in ("config", "laser"):
            raise ValidationError(f"arm_source must be 'config' or 'laser' (got '{self.arm_source}')")
        if prf is not None:
            delay = self.arm_delays[1] - self.arm_delays[0]
            if abs(delay - 1.0 / prf) > 1e-6 / prf:
                raise ValidationError(
                    f"arm delay difference {delay:.6g}s must equal 1/PRF={1.0 / prf:.6g}s"
                )


@dataclass(frozen=True)
class PulseRecord:
    pulse_index: int
    arm1_power: float
    arm2_power: float
    phase: float
    output_power: float
    noise: float


@dataclass(frozen=True)
class PulseRecords:
    """Column view of pulses j = 1..N (pulse 0 has no predecessor)."""

    index: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    theta: np.ndarray
    u_out: np.ndarray
    noise: np.ndarray

    def __len__(self) -> int:
        return int(self.index.size)

    def record(self, i: int) -> PulseRecord:
        return PulseRecord(int(self.index[i]), float(self.u1[i]), float(self.u2[i]), float(self.theta[i]),
                           float(self.u_out[i]), float(self.noise[i]))

    @classmethod
    def concatenate(cls, parts: List["PulseRecords"]) -> "PulseRecords":
        return cls(*(np.concatenate([getattr(p, name) for p in parts])
                     for name in ("index", "u1", "u2", "theta", "u_out", "noise")))


def _interference(u1: np.ndarray, u2: np.ndarray, phase_step: np.ndarray, visibility: float,
                  static_phase: float, noise: np.ndarray) -> np.ndarray:
    beat = 2.0 * visibility * np.sqrt(u1 * u2) * np.cos(phase_step + static_phase)
    # Detected power is non-negative
    return np.maximum(u1 + u2 + beat + noise, 0.0)


def interfere_pulse_train(u1_seq: np.ndarray, u2_seq: np.ndarray, phases: np.ndarray, cfg: InterferometerConfig,
                          noise_variance: float = 0.0, rng: Optional[np.random.Generator] = None,
                          seed: Optional[int] = None) -> PulseRecords:
    """Records for pulses 1..N-1, each interfering with its predecessor."""
    u1_seq, u2_seq, phases = (np.asarray(a, dtype=float) for a in (u1_seq, u2_seq, phases))
    if not u1_seq.size == u2_seq.size == phases.size:
        raise LengthMismatchError(
            f"sequence lengths differ: u1={u1_seq.size}, u2={u2_seq.size}, phases={phases.size}"
        )
    if phases.size < 2:
        raise ValidationError("need at least two pulses to interfere")
    if np.any(u1_seq < 0) or np.any(u2_seq < 0):
        raise ValidationError("arm powers must be non-negative")
    if noise_variance < 0:
        raise ValidationError("noise variance must be non-negative")

    count = phases.size - 1
    if noise_variance > 0:
        if rng is None:
            rng = substream(seed if seed is not None else 0, "detector_noise")
        noise = rng.normal(0.0, math.sqrt(noise_variance), size=count)
    else:
        noise = np.zeros(count)
    u1, u2 = u1_seq[1:], u2_seq[1:]
    u_out = _interference(u1, u2, np.diff(phases), cfg.visibility, cfg.static_phase, noise)
    return PulseRecords(index=np.arange(1, count + 1), u1=u1, u2=u2, theta=phases[1:], u_out=u_out, noise=noise)


def arm_powers(pulse_power: float, cfg: InterferometerConfig) -> Tuple[float, float]:
    """Power reaching the detector through the short and the long arm."""
    e11_1, e12_1 = cfg.coupler1
    e11_2, e21_2 = cfg.coupler2
    return (e11_1 * e11_2) ** 2 * pulse_power, (e12_1 * e21_2) ** 2 * pulse_power


def sample_arm_powers(mean_u1: float, mean_u2: float, sigma: float, count: int,
                      rng_u1: np.random.Generator, rng_u2: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Independent Gaussian arm fluctuations around the means, floored at zero."""
    u1 = rng_u1.normal(mean_u1, sigma, size=count) if sigma > 0 else np.full(count, mean_u1)
    u2 = rng_u2.normal(mean_u2, sigma, size=count) if sigma > 0 else np.full(count, mean_u2)
    return np.maximum(u1, 0.0), np.maximum(u2, 0.0)


@dataclass(frozen=True)
class ArmStatistics:
    mean_u1: float
    mean_u2: float
    var_u1: float
    var_u2: float
    sqrt_mean_sq_u1: float    # E[sqrt(u1)]^2
    sqrt_mean_sq_u2: float    # E[sqrt(u2)]^2

    def as_dict(self) -> dict:
        return asdict(self)


def arm_statistics(u1: np.ndarray, u2: np.ndarray) -> ArmStatistics:
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    return ArmStatistics(
        mean_u1=float(np.mean(u1)), mean_u2=float(np.mean(u2)),
        var_u1=float(np.var(u1)), var_u2=float(np.var(u2)),
        sqrt_mean_sq_u1=float(np.mean(np.sqrt(u1))) ** 2, sqrt_mean_sq_u2=float(np.mean(np.sqrt(u2))) ** 2,
    )


@dataclass(frozen=True)
class VisibilityEstimate:
    value: float
    raw: float              # before clamping; nan when degenerate
    clamped: bool
    degenerate: bool


def estimate_visibility(var_out: float, var_u1: float, var_u2: float, var_noise: float,
                        mean_u1: float, mean_u2: float) -> VisibilityEstimate:
    """|g| from output variance; mean_u1/mean_u2 are taken as E[sqrt(u)]^2 directly."""
    denominator = 2.0 * mean_u1 * mean_u2
    if not denominator > 0:
        raise ValidationError("visibility denominator 2 E[sqrt(u1)]^2 E[sqrt(u2)]^2 must be positive")
    numerator = var_out - var_u1 - var_u2 - var_noise
    if numerator < 0:
        log_warning(
            f"Output variance {var_out:.4g} below arm+noise variance {var_u1 + var_u2 + var_noise:.4g}; "
            "reporting |g| = 0",
            component="interferometer",
        )
        return VisibilityEstimate(value=0.0, raw=float("nan"), clamped=False, degenerate=True)
    raw = math.sqrt(numerator / denominator)
    if raw > 1.0:
        log_warning(f"Visibility estimate {raw:.4f} exceeds 1; clamped", component="interferometer")
        return VisibilityEstimate(value=1.0, raw=raw, clamped=True, degenerate=False)
    return VisibilityEstimate(value=raw, raw=raw, clamped=False, degenerate=False)


def simulate_pulse_records(phases: np.ndarray, cfg: InterferometerConfig, noise_variance: float, seed: int,
                           mean_u1: Optional[float] = None, mean_u2: Optional[float] = None,
                           chunk_size: int = 1 << 18, workers: int = 1) -> PulseRecords:
    """Chunked pulse generation; chunk c draws from its own (stage, c) substreams."""
    phases = np.asarray(phases, dtype=float)
    if phases.size < 2:
        raise ValidationError("need at least two pulses to interfere")
    if chunk_size < 1:
        raise ValidationError("chunk_size must be positive")
    mean_u1 = cfg.arm_mean_u1 if mean_u1 is None else mean_u1
    mean_u2 = cfg.arm_mean_u2 if mean_u2 is None else mean_u2
    count = phases.size - 1
    starts = list(range(0, count, chunk_size))

    def run_chunk(chunk: int) -> PulseRecords:
        lo = starts[chunk]
        hi = min(lo + chunk_size, count)
        n = hi - lo
        u1, u2 = sample_arm_powers(mean_u1, mean_u2, cfg.arm_sigma, n,
                                   substream(seed, "arm_u1", chunk), substream(seed, "arm_u2", chunk))
        if noise_variance > 0:
            noise = substream(seed, "detector_noise", chunk).normal(0.0, math.sqrt(noise_variance), size=n)
        else:
            noise = np.zeros(n)
        step = phases[lo + 1:hi + 1] - phases[lo:hi]
        u_out = _interference(u1, u2, step, cfg.visibility, cfg.static_phase, noise)
        return PulseRecords(index=np.arange(lo + 1, hi + 1), u1=u1, u2=u2, theta=phases[lo + 1:hi + 1],
                            u_out=u_out, noise=noise)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, range(len(starts))))
    else:
        parts = [run_chunk(c) for c in range(len(starts))]
    log_debug(f"Generated {count} pulse records in {len(parts)} chunk(s)", component="interferometer")
    return PulseRecords.concatenate(parts)
