#!/usr/bin/env python3
"""
Pipeline stages for pdqrng.

simulate -> certify -> extract -> test, plus fit. Each stage reads and writes
files in the run's output directory and records its artifacts in the run
manifest; a later stage can run on its own against an earlier run's files.
"""

import os
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from config.pipeline import PipelineConfig
from core.errors import CertificationError, PdqrngError, StageError, ValidationError
from core.formats import read_packed_bits, read_u16le, write_columns, write_json, write_packed_bits, write_text_bits, write_u16le
from core.logger import log_error, log_info, log_warning
from core.manifest import RunManifest
from core.seeding import describe_scheme, substream
from entropy import EntropyReport, NarrowDistributionError, build_entropy_report
from extractor import ExtractionConfig, ExtractionResult, bits_to_symbols, extract
from interferometer import (
    arm_powers, arm_statistics, bin_centres, digitize, estimate_visibility, sample_and_digitize,
    simulate_pulse_records, write_pulse_csv,
)
from laser import (
    LaserParams, build_pulse_train, filtered_power, fit_parameters, load_observed_power, pulse_metrics,
    reverse_bias_fraction, simulate_periodic, steady_state_near_threshold, threshold_current, write_trajectory_csv,
)
from laser.fitting import envelope_margin
from stats import autocorrelation, autocorrelation_floor_db, run_battery, uniformity_deviation, write_battery_report

TRAJECTORY_FILE = "trajectory.csv"
PULSES_FILE = "pulses.csv"
SAMPLES_FILE = "samples.u16"
SIMULATION_FILE = "simulation.json"
REPORT_FILE = "entropy_report.json"
BITS_FILE = "bits.bin"
BITS_TEXT_FILE = "bits.txt"
BATTERY_JSON = "battery.json"
BATTERY_CSV = "battery.csv"
FIT_FILE = "fitted_params.json"


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Pipeline errors pass through; anything else is reported as a failure of `name`."""
    try:
        yield
    except PdqrngError:
        raise
    except Exception as e:
        log_error(f"Stage '{name}' failed: {e}", component="pipeline")
        raise StageError(name, e) from e


def open_manifest(cfg: PipelineConfig, config_text: str) -> RunManifest:
    manifest = RunManifest.load(cfg.run.out_dir)
    manifest.set_config(config_text, describe_scheme(cfg.run.seed))
    return manifest


def _out(cfg: PipelineConfig, name: str) -> str:
    return os.path.join(cfg.run.out_dir, name)


def _write_histogram(path: str, codes: np.ndarray, levels: int) -> str:
    counts = np.bincount(codes, minlength=levels)
    return write_columns(path, ("bin", "count"), [np.arange(levels), counts], formats=["%d", "%d"])


def _write_autocorrelation(path: str, r: np.ndarray) -> str:
    return write_columns(path, ("lag", "r"), [np.arange(1, r.size + 1), r], formats=["%d", "%.17g"])


def resolve_laser(cfg: PipelineConfig) -> LaserParams:
    """Laser parameters for the configured mode (fixed, steady_state or fit)."""
    if cfg.laser_mode == "fixed":
        return cfg.laser
    if cfg.laser_mode == "steady_state":
        steady = steady_state_near_threshold(cfg.threshold_current, cfg.threshold_power, cfg.laser)
        return cfg.laser.with_threshold(
            steady.carriers_threshold, steady.spont_coupling,
            note=f"steady state at I={cfg.threshold_current:g}A, P={cfg.threshold_power:g}W",
        )
    observed = load_observed_power(cfg.reference_trace)
    return fit_parameters(observed, cfg.fit.candidate_lengths, cfg.fit.initial_s_sat, cfg.drive, cfg.laser,
                          cfg.fit.settings)


def cmd_fit(cfg: PipelineConfig, manifest: RunManifest) -> LaserParams:
    if not cfg.reference_trace:
        raise ValidationError("fit needs [laser] reference_trace")
    with stage("fit"):
        observed = load_observed_power(cfg.reference_trace)
        params = fit_parameters(observed, cfg.fit.candidate_lengths, cfg.fit.initial_s_sat, cfg.drive,
                                cfg.laser, cfg.fit.settings)
        path = write_json(_out(cfg, FIT_FILE), params.as_dict())
        manifest.add_output(path, "fitted_params")
        manifest.record_stage("fit", {"reference_trace": os.path.basename(cfg.reference_trace),
                                      "gain_per_carrier": params.gain_per_carrier,
                                      "cavity_length": params.cavity_length,
                                      "photon_saturation": params.photon_saturation})
    return params


@dataclass(frozen=True)
class SimulationResult:
    params: LaserParams
    phase_variance: float
    samples_path: str
    arm_statistics: Dict[str, float]


def cmd_simulate(cfg: PipelineConfig, manifest: RunManifest) -> SimulationResult:
    """Laser -> pulse train -> interferometer -> ADC, with every artifact listed in the manifest."""
    if cfg.run.pulses < 1:
        raise ValidationError("run needs at least one pulse")
    with stage("simulate"):
        params = resolve_laser(cfg)
        drive = cfg.drive
        log_info(
            f"Drive: {drive.dc_bias * 1e3:.2f}mA + {drive.rf_amplitude * 1e3:.2f}mA at {drive.prf / 1e9:.3f}GHz, "
            f"reverse-biased {reverse_bias_fraction(drive) * 100:.1f}% of the cycle; "
            f"threshold current {threshold_current(params) * 1e3:.2f}mA",
            component="laser",
        )
        traj = simulate_periodic(params, drive)
        manifest.add_output(write_trajectory_csv(_out(cfg, TRAJECTORY_FILE), traj), "trajectory")

        envelope = filtered_power(traj, cfg.interferometer.detector_bandwidth,
                                  cfg.interferometer.photodiode_bandwidth)
        metrics = pulse_metrics(traj.times, envelope, drive.period)
        summary: Dict[str, object] = {
            "pulse_width_s": metrics.width,
            "pulse_peak_w": metrics.peak_power,
            "threshold_current_a": threshold_current(params),
            "reverse_bias_fraction": reverse_bias_fraction(drive),
            "laser": params.as_dict(),
        }
        if cfg.reference_trace:
            observed = load_observed_power(cfg.reference_trace)
            margin, rms = envelope_margin(params, drive, observed, cfg.fit.settings)
            summary["envelope_margin"] = margin
            summary["envelope_rms_w"] = rms
            if margin < -cfg.fit.settings.margin_tolerance:
                log_warning(f"Simulated envelope falls below the reference trace (margin {margin:.3g})",
                            component="laser")

        count = cfg.run.pulses
        train = build_pulse_train(traj, params, drive, cfg.interferometer.detector_bandwidth,
                                  cfg.adc.sample_offset, count + 1, rng=substream(cfg.run.seed, "phases"),
                                  photodiode_bandwidth=cfg.interferometer.photodiode_bandwidth)
        summary["phase_variance_rad2"] = train.phase_variance
        summary["phase_rms_rad"] = float(np.sqrt(train.phase_variance))
        summary["sample_power_w"] = train.sample_power

        if cfg.interferometer.arm_source == "laser":
            mean_u1, mean_u2 = arm_powers(train.sample_power, cfg.interferometer)
        else:
            mean_u1, mean_u2 = cfg.interferometer.arm_mean_u1, cfg.interferometer.arm_mean_u2
        records = simulate_pulse_records(train.phases, cfg.interferometer, cfg.adc.noise_variance, cfg.run.seed,
                                         mean_u1=mean_u1, mean_u2=mean_u2, chunk_size=cfg.run.chunk_size,
                                         workers=cfg.run.threads)
        bins = sample_and_digitize(records, cfg.adc)

        samples_path = write_u16le(_out(cfg, SAMPLES_FILE), bins)
        manifest.add_output(samples_path, "samples_u16le")
        manifest.add_output(write_pulse_csv(_out(cfg, PULSES_FILE), records, bins), "pulse_records")
        levels = cfg.adc.levels
        for name, codes in (("u1", digitize(records.u1, cfg.adc)), ("u2", digitize(records.u2, cfg.adc)),
                            ("uout", bins)):
            manifest.add_output(_write_histogram(_out(cfg, f"histogram_{name}.csv"), codes, levels), "histogram")
        if bins.size > cfg.stats.max_lag and np.ptp(bins) > 0:
            r = autocorrelation(bins, cfg.stats.max_lag)
            summary["raw_autocorrelation_floor_db"] = autocorrelation_floor_db(r)
            manifest.add_output(_write_autocorrelation(_out(cfg, "raw_autocorrelation.csv"), r), "autocorrelation")

        arms = arm_statistics(records.u1, records.u2).as_dict()
        summary["arm_statistics"] = arms
        manifest.add_output(write_json(_out(cfg, SIMULATION_FILE), summary), "simulation_summary")
        manifest.record_stage("simulate", {
            "pulses": count,
            "phase_variance_rad2": train.phase_variance,
            "arm_statistics": arms,
            "noise_variance_w2": cfg.adc.noise_variance,
            "prf_hz": drive.prf,
            "resolution_bits": cfg.adc.resolution,
        })
    log_info(f"Simulated {count} pulses; phase variance {train.phase_variance:.4g} rad^2", component="pipeline")
    return SimulationResult(params=params, phase_variance=train.phase_variance, samples_path=samples_path,
                            arm_statistics=arms)


def _arm_inputs(cfg: PipelineConfig, manifest: RunManifest,
                arm_stats: Optional[Dict[str, float]]) -> Tuple[Dict[str, float], str]:
    if arm_stats is not None:
        return arm_stats, "caller"
    simulated = manifest.stage("simulate")
    if simulated and "arm_statistics" in simulated:
        return simulated["arm_statistics"], "simulation manifest"
    icfg = cfg.interferometer
    # Without per-pulse arm records E[sqrt(u)]^2 is approximated by E[u]
    return {
        "mean_u1": icfg.arm_mean_u1, "mean_u2": icfg.arm_mean_u2,
        "var_u1": icfg.arm_sigma ** 2, "var_u2": icfg.arm_sigma ** 2,
        "sqrt_mean_sq_u1": icfg.arm_mean_u1, "sqrt_mean_sq_u2": icfg.arm_mean_u2,
    }, "config"


def cmd_certify(samples_path: str, cfg: PipelineConfig, manifest: RunManifest,
                arm_stats: Optional[Dict[str, float]] = None) -> EntropyReport:
    """Estimate |g| from the samples and certify the min-entropy of their quantum part."""
    codes = read_u16le(samples_path, cfg.adc.resolution)
    if codes.size < 2:
        raise ValidationError(f"{samples_path}: need at least two samples")
    arms, source = _arm_inputs(cfg, manifest, arm_stats)
    if cfg.certify.denominator_moment == "sqrt_mean":
        d1, d2 = arms["sqrt_mean_sq_u1"], arms["sqrt_mean_sq_u2"]
    else:
        d1, d2 = arms["mean_u1"], arms["mean_u2"]

    with stage("certify"):
        var_out = float(np.var(bin_centres(codes, cfg.adc)))
        estimate = estimate_visibility(var_out, arms["var_u1"], arms["var_u2"], cfg.adc.noise_variance, d1, d2)
        provenance = {
            "var_out": f"variance of {codes.size} ADC bin centres from {os.path.basename(samples_path)}",
            "arm_statistics": source,
            "var_noise": "config [adc] noise_variance",
            "denominator_moment": cfg.certify.denominator_moment,
            "u_min_u_max": "arm means E[u1], E[u2]",
        }
        try:
            report = build_entropy_report(estimate, arms["mean_u1"], arms["mean_u2"], cfg.adc, cfg.drive.prf,
                                          entropy_basis=cfg.certify.entropy_basis, provenance=provenance)
        except NarrowDistributionError as e:
            # Failed certifications still leave a report behind; it cannot be loaded for extraction
            warning = "output variance below arm+noise variance; visibility set to 0" if estimate.degenerate else str(e)
            failed = {
                "certified": False, "visibility": estimate.value, "raw_visibility": estimate.raw,
                "degenerate_statistics": estimate.degenerate, "visibility_clamped": estimate.clamped,
                "warning": warning, "error": str(e), "provenance": provenance,
            }
            manifest.add_output(write_json(_out(cfg, REPORT_FILE), failed), "entropy_report")
            manifest.record_stage("certify", {"visibility": estimate.value, "certified": False})
            raise CertificationError(f"certification failed: {e} (|g|={estimate.value:.4g})") from e
        path = report.save(_out(cfg, REPORT_FILE))
        manifest.add_output(path, "entropy_report")
        manifest.record_stage("certify", {"visibility": report.visibility, "h_exact": report.h_exact,
                                          "h_closed_form": report.h_closed_form,
                                          "reduction_factor": report.reduction_factor})
    if report.certified_entropy < cfg.certify.min_entropy:
        raise CertificationError(
            f"certified min-entropy {report.certified_entropy:.4f} bits below {cfg.certify.min_entropy:g}"
        )
    return report


def cmd_extract(samples_path: str, report_path: str, out_path: str, cfg: PipelineConfig,
                manifest: RunManifest, text_output: bool = False) -> ExtractionResult:
    report = EntropyReport.load(report_path)
    extraction = ExtractionConfig(
        input_bits_per_sample=report.resolution, reduction_factor=report.reduction_factor,
        hash_algorithm=cfg.extraction.hash_algorithm, block_size=cfg.extraction.block_size,
        workers=cfg.run.threads,
    )
    extraction.validate()
    codes = read_u16le(samples_path, report.resolution)
    with stage("extract"):
        result = extract(codes, extraction)
        manifest.add_output(write_packed_bits(out_path, result.bits), "bits_packed")
        if text_output or cfg.extraction.text_output:
            text_path = os.path.splitext(out_path)[0] + ".txt"
            manifest.add_output(write_text_bits(text_path, result.bits), "bits_text")
        manifest.record_stage("extract", {
            "bits": int(result.bits.size), "blocks": result.blocks, "dropped_bits": result.dropped_bits,
            "dropped_samples": result.dropped_samples, "reduction_factor": report.reduction_factor,
            "hash_algorithm": extraction.hash_algorithm,
        })
    return result


def cmd_test(bits_path: str, cfg: PipelineConfig, manifest: RunManifest):
    extracted = manifest.stage("extract")
    bit_count = extracted.get("bits") if extracted else None
    bits = read_packed_bits(bits_path, bit_count)
    if bits.size < 2 * cfg.stats.seq_len:
        raise ValidationError(f"{bits.size} bits; the battery needs at least {2 * cfg.stats.seq_len}")
    with stage("test"):
        outcomes, summary = run_battery(bits, cfg.stats.seq_len, cfg.stats.significance, workers=cfg.run.threads)
        json_path, csv_path = write_battery_report(_out(cfg, BATTERY_JSON), _out(cfg, BATTERY_CSV), outcomes, summary)
        manifest.add_output(json_path, "battery_report")
        manifest.add_output(csv_path, "battery_summary")

        k = cfg.stats.symbol_bits
        symbols = bits_to_symbols(bits, k)
        info: Dict[str, object] = {"sequences": summary.sequences, "all_passed": summary.all_passed}
        if symbols.size >= (1 << k):
            deviation = uniformity_deviation(symbols, k)
            path = write_columns(_out(cfg, "symbol_uniformity.csv"), ("symbol", "deviation", "sigma"),
                                 [np.arange(1 << k), deviation.deviation, np.full(1 << k, deviation.sigma)],
                                 formats=["%d", "%.17g", "%.17g"])
            manifest.add_output(path, "symbol_uniformity")
            info["max_deviation_sigma"] = float(np.max(np.abs(deviation.deviation)) / deviation.sigma)
        if symbols.size > cfg.stats.max_lag and np.ptp(symbols) > 0:
            r = autocorrelation(symbols, cfg.stats.max_lag)
            manifest.add_output(_write_autocorrelation(_out(cfg, "bits_autocorrelation.csv"), r), "autocorrelation")
            info["autocorrelation_floor_db"] = autocorrelation_floor_db(r)
        manifest.record_stage("test", info)
    return summary


def run_all(cfg: PipelineConfig, manifest: RunManifest, text_output: bool = False):
    simulation = cmd_simulate(cfg, manifest)
    manifest.save()
    report = cmd_certify(simulation.samples_path, cfg, manifest)
    manifest.save()
    cmd_extract(simulation.samples_path, _out(cfg, REPORT_FILE), _out(cfg, BITS_FILE), cfg, manifest,
                text_output=text_output)
    manifest.save()
    summary = cmd_test(_out(cfg, BITS_FILE), cfg, manifest)
    manifest.save()
    log_info(f"Run complete: H={report.certified_entropy:.4f} bits, RF={report.reduction_factor:.4f}, "
             f"battery {'passed' if summary.all_passed else 'FAILED'}", component="pipeline")
    return summary
