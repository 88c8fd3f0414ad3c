#!/usr/bin/env python3
"""
Typed pipeline configuration.
Every module invariant is checked here, before any stage runs.
"""

import os
from dataclasses import dataclass
from typing import Optional, Tuple

from config.manager import ConfigurationError
from core.formats import read_columns
from core.logger import log_debug
from extractor import resolve_hash
from interferometer import AdcConfig, InterferometerConfig
from laser import DriveWaveform, FitSettings, LaserParams
from laser.fitting import default_s_sat_grid

TRACE_HEADER = ("phase", "value")


@dataclass(frozen=True)
class RunSettings:
    pulses: int
    seed: int
    out_dir: str
    threads: int
    chunk_size: int
    verbose: bool


@dataclass(frozen=True)
class ExtractionSettings:
    hash_algorithm: str
    block_size: int
    text_output: bool


@dataclass(frozen=True)
class StatsSettings:
    seq_len: int
    significance: float
    max_lag: int
    symbol_bits: int


@dataclass(frozen=True)
class CertifySettings:
    entropy_basis: str
    min_entropy: float
    denominator_moment: str


@dataclass(frozen=True)
class FitOptions:
    candidate_lengths: Tuple[float, ...]
    initial_s_sat: float
    settings: FitSettings


@dataclass(frozen=True)
class PipelineConfig:
    laser: LaserParams
    laser_mode: str
    threshold_current: float
    threshold_power: float
    reference_trace: Optional[str]
    drive: DriveWaveform
    warmup_periods: int
    interferometer: InterferometerConfig
    adc: AdcConfig
    run: RunSettings
    extraction: ExtractionSettings
    stats: StatsSettings
    certify: CertifySettings
    fit: FitOptions


def _existing_path(manager, path: str, what: str) -> str:
    if not path:
        return ""
    if not os.path.isabs(path) and manager.get_config_path():
        # Relative paths are resolved next to the config file first
        candidate = os.path.join(os.path.dirname(os.path.abspath(manager.get_config_path())), path)
        if os.path.exists(candidate):
            return candidate
    if not os.path.exists(path):
        raise ConfigurationError(f"{what} not found: {path}")
    return path


def _build_laser(m) -> LaserParams:
    section = "laser"
    mirror_loss = m.getfloat("mirror_loss", section)
    power_per_photon = m.getfloat("power_per_photon", section)
    return LaserParams.build(
        cavity_length=m.getfloat("cavity_length", section),
        carriers_threshold=m.getfloat("carriers_threshold", section),
        spont_coupling=m.getfloat("spont_coupling", section),
        photon_saturation=m.getfloat("photon_saturation", section),
        gain_per_carrier=m.getfloat("gain_per_carrier", section),
        carrier_decay=m.getfloat("carrier_decay", section),
        linewidth_enhancement=m.getfloat("linewidth_enhancement", section),
        effective_index=m.getfloat("effective_index", section),
        scatter_loss=m.getfloat("scatter_loss", section),
        mirror_loss=mirror_loss or None,
        wavelength=m.getfloat("wavelength", section),
        power_per_photon=power_per_photon or None,
        photon_floor=m.getfloat("photon_floor", section),
        provenance={"gain_per_carrier": "config", "carriers_threshold": "config",
                    "spont_coupling": "config", "photon_saturation": "config"},
    )


def _build_drive(m, warmup_periods: int) -> DriveWaveform:
    section = "drive"
    prf = m.getfloat("prf", section)
    if not prf > 0:
        raise ConfigurationError("[drive] prf must be positive")
    dt = m.getfloat("dt", section)
    dc_bias = m.getfloat("dc_bias", section)
    amplitude = m.getfloat("rf_amplitude", section)
    duration = warmup_periods / prf
    shape = m.getchoice("shape", section)
    if amplitude == 0.0:
        drive = DriveWaveform.for_reverse_bias_fraction(
            dc_bias=dc_bias, reverse_fraction=m.getfloat("reverse_bias_fraction", section),
            prf=prf, duration=duration, dt=dt,
        )
    else:
        drive = DriveWaveform(dc_bias=dc_bias, rf_amplitude=amplitude, prf=prf, duration=duration, dt=dt)
    if shape == "trace":
        path = _existing_path(m, m.get("trace_file", section), "drive trace file")
        if not path:
            raise ConfigurationError("[drive] shape = trace needs trace_file")
        cols = read_columns(path, TRACE_HEADER)
        drive = DriveWaveform(
            dc_bias=drive.dc_bias, rf_amplitude=drive.rf_amplitude, prf=prf, duration=duration, dt=dt,
            shape="trace", trace_phase=tuple(cols["phase"].tolist()), trace_values=tuple(cols["value"].tolist()),
        )
    drive.validate()
    return drive


def build_pipeline_config(m) -> PipelineConfig:
    warmup = m.getint("warmup_periods", "drive")
    drive = _build_drive(m, warmup)
    laser = _build_laser(m)
    mode = m.getchoice("mode", "laser")
    reference = _existing_path(m, m.get("reference_trace", "laser"), "reference trace")
    if mode == "fit" and not reference:
        raise ConfigurationError("[laser] mode = fit needs reference_trace")

    sec = "interferometer"
    delay = m.getfloat("arm_delay_difference", sec) or 1.0 / drive.prf
    interferometer = InterferometerConfig(
        coupler1=(m.getfloat("coupler1_e11", sec), m.getfloat("coupler1_e12", sec)),
        coupler2=(m.getfloat("coupler2_e11", sec), m.getfloat("coupler2_e21", sec)),
        arm_delays=(0.0, delay),
        static_phase=m.getfloat("static_phase", sec),
        visibility=m.getfloat("visibility", sec),
        detector_bandwidth=m.getfloat("detector_bandwidth", sec),
        photodiode_bandwidth=m.getfloat("photodiode_bandwidth", sec),
        arm_mean_u1=m.getfloat("arm_mean_u1", sec),
        arm_mean_u2=m.getfloat("arm_mean_u2", sec),
        arm_sigma=m.getfloat("arm_sigma", sec),
        arm_source=m.getchoice("arm_source", sec),
    )
    interferometer.validate(prf=drive.prf)

    adc = AdcConfig(
        resolution=m.getint("resolution", "adc"),
        dynamic_range=m.getfloat("dynamic_range", "adc"),
        noise_variance=m.getfloat("noise_variance", "adc"),
        sample_offset=m.getfloat("sample_offset", "adc"),
    )
    adc.validate()

    run = RunSettings(
        pulses=m.getint("pulses", "run"),
        seed=m.getint("seed", "run"),
        out_dir=m.get("out_dir", "run"),
        threads=m.getint("threads", "run"),
        chunk_size=m.getint("chunk_size", "run"),
        verbose=m.getboolean("verbose", "run"),
    )
    if run.seed >= 1 << 64:
        raise ConfigurationError("[run] seed must fit in 64 bits")

    extraction = ExtractionSettings(
        hash_algorithm=m.get("hash_algorithm", "extraction"),
        block_size=m.getint("block_size", "extraction"),
        text_output=m.getboolean("text_output", "extraction"),
    )
    if extraction.block_size % 8:
        raise ConfigurationError("[extraction] block_size must be a multiple of 8")
    resolve_hash(extraction.hash_algorithm)

    stats = StatsSettings(
        seq_len=m.getint("seq_len", "stats"),
        significance=m.getfloat("significance", "stats"),
        max_lag=m.getint("max_lag", "stats"),
        symbol_bits=m.getint("symbol_bits", "stats"),
    )
    if not 0.0 < stats.significance < 1.0:
        raise ConfigurationError("[stats] significance must lie in (0, 1)")

    certify = CertifySettings(
        entropy_basis=m.getchoice("entropy_basis", "certify"),
        min_entropy=m.getfloat("min_entropy", "certify"),
        denominator_moment=m.getchoice("denominator_moment", "certify"),
    )

    initial_s_sat = m.getfloat("initial_s_sat", "fit")
    s_low, s_high = m.getfloat("s_sat_low", "fit"), m.getfloat("s_sat_high", "fit")
    if not 0 < s_low < s_high:
        raise ConfigurationError("[fit] need 0 < s_sat_low < s_sat_high")
    fit = FitOptions(
        candidate_lengths=tuple(m.getfloatlist("candidate_lengths", "fit")),
        initial_s_sat=initial_s_sat,
        settings=FitSettings(
            threshold_current=m.getfloat("threshold_current", "laser"),
            threshold_power=m.getfloat("threshold_power", "laser"),
            bandwidth=interferometer.detector_bandwidth,
            photodiode_bandwidth=interferometer.photodiode_bandwidth,
            warmup_periods=warmup,
            s_sat_grid=default_s_sat_grid(initial_s_sat, s_low, s_high, m.getint("s_sat_points", "fit")),
            gain_grid_points=m.getint("gain_grid_points", "fit"),
            bisection_steps=m.getint("bisection_steps", "fit"),
            margin_tolerance=m.getfloat("margin_tolerance", "fit"),
            workers=run.threads,
        ),
    )
    if any(length <= 0 for length in fit.candidate_lengths):
        raise ConfigurationError("[fit] candidate_lengths must be positive")

    log_debug(f"Pipeline config built (mode={mode}, pulses={run.pulses}, seed={run.seed})", component="config")
    return PipelineConfig(
        laser=laser, laser_mode=mode, threshold_current=m.getfloat("threshold_current", "laser"),
        threshold_power=m.getfloat("threshold_power", "laser"), reference_trace=reference or None,
        drive=drive, warmup_periods=warmup, interferometer=interferometer, adc=adc, run=run,
        extraction=extraction, stats=stats, certify=certify, fit=fit,
    )
