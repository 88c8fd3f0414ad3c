#!/usr/bin/env python3
"""
Laser Model Types for pdqrng
Device parameters, drive waveform and the time series the integrator produces.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import constants

from core.errors import ValidationError

SPEED_OF_LIGHT = constants.c
PLANCK = constants.h
ELEMENTARY_CHARGE = constants.e

# alpha_m ~ 1.4 / L for a cleaved-facet cavity of length L
MIRROR_LOSS_COEFFICIENT = 1.4
DEFAULT_WAVELENGTH = 1550e-9
DEFAULT_PRF = 5.825e9
REFERENCE_DC_BIAS = 23e-3
REFERENCE_REVERSE_FRACTION = 0.34
CONSISTENCY_RTOL = 1e-9


class LaserConfigError(ValidationError):
    """Raised when laser or drive parameters break their invariants"""
    pass


def _close(a: float, b: float, rtol: float = CONSISTENCY_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b))


def cavity_decay_rate(mirror_loss: float, scatter_loss: float, effective_index: float) -> float:
    """gamma = c (alpha_m + alpha_s) / n_bar"""
    return SPEED_OF_LIGHT * (mirror_loss + scatter_loss) / effective_index


def photon_energy(wavelength: float) -> float:
    return PLANCK * SPEED_OF_LIGHT / wavelength


def mirror_escape_power_per_photon(wavelength: float, mirror_loss: float, effective_index: float) -> float:
    """Output power per intracavity photon: hbar*omega * c*alpha_m/n_bar."""
    return photon_energy(wavelength) * SPEED_OF_LIGHT * mirror_loss / effective_index


@dataclass(frozen=True)
class LaserParams:
    """Single-mode rate-equation coefficients. Rates in s^-1, counts dimensionless."""

    gain_per_carrier: float           # G_N
    carriers_transparency: float      # n0
    carriers_threshold: float         # n_th
    photon_saturation: float          # s_sat
    carrier_decay: float              # gamma_e
    cavity_decay: float               # gamma
    linewidth_enhancement: float      # alpha
    spont_coupling: float             # R0
    cavity_length: float              # L (m)
    effective_index: float            # n_bar
    scatter_loss: float               # alpha_s (1/m)
    mirror_loss: float                # alpha_m (1/m)
    power_per_photon: float           # W per intracavity photon
    electron_charge: float = ELEMENTARY_CHARGE
    wavelength: float = DEFAULT_WAVELENGTH
    photon_floor: float = 1.0
    provenance: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def build(
        cls,
        *,
        cavity_length: float,
        carriers_threshold: float,
        spont_coupling: float,
        photon_saturation: float,
        gain_per_carrier: float,
        carrier_decay: float = 1e9,
        linewidth_enhancement: float = 5.4,
        effective_index: float = 4.33,
        scatter_loss: float = 4500.0,
        mirror_loss: Optional[float] = None,
        wavelength: float = DEFAULT_WAVELENGTH,
        power_per_photon: Optional[float] = None,
        photon_floor: float = 1.0,
        provenance: Optional[Dict[str, str]] = None,
    ) -> "LaserParams":
        """Derive gamma, n0 and the power conversion from device quantities.

        n0 follows from G_N = gamma / (n_th - n0); the mirror loss defaults to
        1.4/L and the power conversion to the mirror-escape relation.
        """
        if cavity_length <= 0 or effective_index <= 0:
            raise LaserConfigError("cavity_length and effective_index must be positive")
        if gain_per_carrier <= 0:
            raise LaserConfigError("gain_per_carrier must be positive")
        alpha_m = MIRROR_LOSS_COEFFICIENT / cavity_length if mirror_loss is None else mirror_loss
        gamma = cavity_decay_rate(alpha_m, scatter_loss, effective_index)
        n0 = carriers_threshold - gamma / gain_per_carrier
        conversion = (mirror_escape_power_per_photon(wavelength, alpha_m, effective_index)
                      if power_per_photon is None else power_per_photon)
        notes = {
            "cavity_decay": "derived: c*(alpha_m+alpha_s)/n_bar",
            "carriers_transparency": "derived: n_th - gamma/G_N",
            "mirror_loss": "derived: 1.4/L" if mirror_loss is None else "input",
            "power_per_photon": "derived: h*c/lambda * c*alpha_m/n_bar" if power_per_photon is None else "input",
        }
        notes.update(provenance or {})
        params = cls(
            gain_per_carrier=gain_per_carrier,
            carriers_transparency=n0,
            carriers_threshold=carriers_threshold,
            photon_saturation=photon_saturation,
            carrier_decay=carrier_decay,
            cavity_decay=gamma,
            linewidth_enhancement=linewidth_enhancement,
            spont_coupling=spont_coupling,
            cavity_length=cavity_length,
            effective_index=effective_index,
            scatter_loss=scatter_loss,
            mirror_loss=alpha_m,
            power_per_photon=conversion,
            wavelength=wavelength,
            photon_floor=photon_floor,
            provenance=notes,
        )
        params.validate()
        return params

    @classmethod
    def reference_default(cls) -> "LaserParams":
        """Fitted DFB parameter set (L = 500 um); n0 is re-derived from G_N."""
        return cls.build(
            cavity_length=500e-6, carriers_threshold=5.62e7, spont_coupling=8.8e-4,
            photon_saturation=7.7e5, gain_per_carrier=2.3e4,
            provenance={"gain_per_carrier": "published fit", "carriers_threshold": "published fit",
                        "spont_coupling": "published fit", "photon_saturation": "published fit"},
        )

    def validate(self) -> None:
        if not (self.carriers_threshold > self.carriers_transparency > 0):
            raise LaserConfigError(
                f"need n_th > n0 > 0 (n_th={self.carriers_threshold:.6g}, n0={self.carriers_transparency:.6g}); "
                "raise G_N or n_th"
            )
        for name in ("photon_saturation", "carrier_decay", "cavity_decay", "power_per_photon"):
            if not getattr(self, name) > 0:
                raise LaserConfigError(f"{name} must be positive")
        # R0 = 0 is admitted: the unpumped-cavity limit has no spontaneous seeding
        if self.spont_coupling < 0:
            raise LaserConfigError("spont_coupling must be non-negative")
        if self.photon_floor < 0:
            raise LaserConfigError("photon_floor must be non-negative")
        gain_check = self.cavity_decay / (self.carriers_threshold - self.carriers_transparency)
        if not _close(self.gain_per_carrier, gain_check):
            raise LaserConfigError(
                f"G_N={self.gain_per_carrier:.9g} inconsistent with gamma/(n_th-n0)={gain_check:.9g}"
            )
        gamma_check = cavity_decay_rate(self.mirror_loss, self.scatter_loss, self.effective_index)
        if not _close(self.cavity_decay, gamma_check):
            raise LaserConfigError(
                f"gamma={self.cavity_decay:.9g} inconsistent with c(alpha_m+alpha_s)/n_bar={gamma_check:.9g}"
            )

    def with_threshold(self, carriers_threshold: float, spont_coupling: float, note: str = "") -> "LaserParams":
        """Replace n_th and R0, keeping G_N (so n0 moves with n_th)."""
        n0 = carriers_threshold - self.cavity_decay / self.gain_per_carrier
        provenance = dict(self.provenance)
        if note:
            provenance.update({"carriers_threshold": note, "spont_coupling": note})
        params = dataclasses.replace(
            self, carriers_threshold=carriers_threshold, spont_coupling=spont_coupling,
            carriers_transparency=n0, provenance=provenance,
        )
        params.validate()
        return params

    def with_gain(self, gain_per_carrier: float, note: str = "") -> "LaserParams":
        """Replace G_N; n0 is re-derived from the gain relation."""
        n0 = self.carriers_threshold - self.cavity_decay / gain_per_carrier
        provenance = dict(self.provenance)
        if note:
            provenance["gain_per_carrier"] = note
        params = dataclasses.replace(
            self, gain_per_carrier=gain_per_carrier, carriers_transparency=n0, provenance=provenance,
        )
        params.validate()
        return params

    def as_dict(self) -> Dict[str, object]:
        values = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "provenance"}
        values["provenance"] = dict(self.provenance)
        return values


@dataclass(frozen=True)
class DriveWaveform:
    """Injection current I(t) = dc_bias + rf_amplitude * shape(t mod 1/prf)."""

    dc_bias: float                 # A
    rf_amplitude: float            # A
    prf: float                     # Hz
    duration: float                # s
    dt: float                      # s
    shape: str = "sinusoid"        # "sinusoid" or "trace"
    # One period of a sampled waveform, normalised to unit peak amplitude
    trace_phase: Tuple[float, ...] = ()
    trace_values: Tuple[float, ...] = ()

    @classmethod
    def for_reverse_bias_fraction(cls, dc_bias: float, reverse_fraction: float, prf: float,
                                  duration: float, dt: float) -> "DriveWaveform":
        """Sinusoidal drive whose current is negative for reverse_fraction of the cycle."""
        if not 0.0 < reverse_fraction < 0.5:
            raise LaserConfigError("reverse_fraction must lie in (0, 0.5) for a positive bias")
        amplitude = dc_bias / math.sin(math.pi * (0.5 - reverse_fraction))
        return cls(dc_bias=dc_bias, rf_amplitude=amplitude, prf=prf, duration=duration, dt=dt)

    @classmethod
    def reference_default(cls, periods: int = 24, dt: float = 0.2e-12) -> "DriveWaveform":
        """23 mA bias, 5.825 GHz, reverse-biased for 34% of the cycle.

        Calibrated so that, through the default photodiode and oscilloscope
        poles, the detected pulses come out near 85 ps wide and 7.65 mW high.
        """
        prf = DEFAULT_PRF
        return cls.for_reverse_bias_fraction(
            dc_bias=REFERENCE_DC_BIAS, reverse_fraction=REFERENCE_REVERSE_FRACTION, prf=prf,
            duration=periods / prf, dt=dt,
        )

    @property
    def period(self) -> float:
        return 1.0 / self.prf

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    def validate(self) -> None:
        if self.prf <= 0 or self.duration <= 0 or self.dt <= 0:
            raise LaserConfigError("prf, duration and dt must be positive")
        if not self.dt < 1.0 / (100.0 * self.prf):
            raise LaserConfigError(
                f"dt={self.dt:.3g}s too coarse: must be below 1/(100*prf)={1.0 / (100.0 * self.prf):.3g}s"
            )
        if self.shape not in ("sinusoid", "trace"):
            raise LaserConfigError(f"unknown drive shape '{self.shape}'")
        if self.shape == "trace":
            if len(self.trace_phase) < 2 or len(self.trace_phase) != len(self.trace_values):
                raise LaserConfigError("trace drive needs matching phase/value samples (>= 2)")
            phase = np.asarray(self.trace_phase)
            if np.any(np.diff(phase) <= 0) or phase[0] < 0 or phase[-1] >= 1:
                raise LaserConfigError("trace phases must be increasing within [0, 1)")

    def current(self, t: np.ndarray) -> np.ndarray:
        """Instantaneous current; negative values (reverse bias) are kept."""
        t = np.asarray(t, dtype=float)
        if self.shape == "sinusoid":
            return self.dc_bias + self.rf_amplitude * np.sin(2.0 * np.pi * self.prf * t)
        phase = np.mod(t * self.prf, 1.0)
        shape = np.interp(phase, self.trace_phase, self.trace_values, period=1.0)
        return self.dc_bias + self.rf_amplitude * shape


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray            # s
    photons: np.ndarray          # s(t)
    carriers: np.ndarray         # n(t)
    spont_rate: np.ndarray       # R_sp(t), 1/s
    phase_variance: np.ndarray   # cumulative <dtheta^2>, rad^2
    output_power: np.ndarray     # W

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class SteadyState:
    current: float               # I_th' (A)
    photons: float               # s_th'
    measured_power: float        # W
    carriers_threshold: float    # n_th
    spont_coupling: float        # R0


@dataclass(frozen=True)
class PulseTrain:
    """One period of the filtered pulse envelope plus the per-pulse phases."""

    envelope_times: np.ndarray   # s, relative to the start of the period
    envelope_power: np.ndarray   # W, after the detector filter
    peak_time: float             # s, relative
    sample_time: float           # s, relative (peak + sample_offset)
    sample_power: float          # W
    phase_variance: float        # rad^2 accumulated over one inter-pulse interval
    phases: np.ndarray           # theta_j, rad

    @property
    def count(self) -> int:
        return int(self.phases.size)
