#!/usr/bin/env python3
"""Reproduce the published reference figures with the pdqrng models.

Prints one line per quantity with the reference value next to the computed
one, and optionally writes the same table as JSON. The laser section runs
the rate equations (a couple of seconds); pass --skip-laser for the closed
form checks only. The histogram section simulates a million pulses.

Usage:
    python3 tools/acceptance_report.py
    python3 tools/acceptance_report.py --json output/acceptance.json
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.formats import write_json
from entropy import (
    arcsine_bounds, arcsine_histogram_fit, arcsine_moments, build_entropy_report, min_entropy_closed_form,
    randomness_rate,
)
from interferometer import AdcConfig, InterferometerConfig, digitize, estimate_visibility, simulate_pulse_records
from laser import (
    DriveWaveform, LaserParams, accumulate_phase_variance, filtered_power, pulse_metrics, reverse_bias_fraction,
    simulate_periodic, steady_state_near_threshold, threshold_current, wrapped_gaussian_uniformity_error,
)

PRF = 5.825e9
BANDWIDTH = 12.5e9
PHOTODIODE_BANDWIDTH = 10e9
HISTOGRAM_PULSES = 1_000_000
HISTOGRAM_SEED = 1

# Measured statistics of the reference experiment (W and W^2)
VAR_OUT = 1.4e-6
VAR_U1 = 2.0e-9
VAR_U2 = 2.1e-9
VAR_NOISE = 1.45e-10
MEAN_U1 = 0.97e-3
MEAN_U2 = 0.90e-3
REFERENCE_SPAN = 3.34e-3
REFERENCE_ENTROPY = 7.33


def _row(rows, name, value, reference=None, unit=""):
    rows.append({"quantity": name, "value": value, "reference": reference, "unit": unit})


def laser_rows(rows):
    params = LaserParams.reference_default()
    _row(rows, "cavity decay gamma", params.cavity_decay, None, "1/s")
    _row(rows, "transparency carriers n0", params.carriers_transparency, 3.46e7, "")
    _row(rows, "threshold current", threshold_current(params), 9e-3, "A")

    steady = steady_state_near_threshold(10e-3, 0.3e-3, params)
    _row(rows, "steady-state n_th", steady.carriers_threshold, 5.62e7, "")
    _row(rows, "steady-state R0", steady.spont_coupling, 8.8e-4, "")

    drive = DriveWaveform.reference_default()
    _row(rows, "drive RF amplitude", drive.rf_amplitude, None, "A")
    _row(rows, "reverse-biased fraction", reverse_bias_fraction(drive), None, "")

    traj = simulate_periodic(params, drive)
    envelope = filtered_power(traj, BANDWIDTH, PHOTODIODE_BANDWIDTH)
    metrics = pulse_metrics(traj.times, envelope, drive.period)
    _row(rows, "pulse FWHM", metrics.width, 85e-12, "s")
    _row(rows, "pulse peak power", metrics.peak_power, 7.65e-3, "W")
    t_end = float(traj.times[-1])
    variance = accumulate_phase_variance(traj, params, t_end - drive.period, t_end)
    _row(rows, "phase variance per period", variance, 9.45 ** 2, "rad^2")
    _row(rows, "folded phase uniformity error", wrapped_gaussian_uniformity_error(variance), None, "")


def entropy_rows(rows):
    adc = AdcConfig()
    estimate = estimate_visibility(VAR_OUT, VAR_U1, VAR_U2, VAR_NOISE, MEAN_U1, MEAN_U2)
    _row(rows, "visibility |g|", estimate.value, 0.90, "")

    model = arcsine_bounds(MEAN_U1, MEAN_U2, estimate.value)
    _row(rows, "arcsine span", model.span, REFERENCE_SPAN, "W")

    h_closed = min_entropy_closed_form(adc, REFERENCE_SPAN)
    _row(rows, "min-entropy, closed form", h_closed, REFERENCE_ENTROPY, "bits")
    _row(rows, "randomness rate", randomness_rate(h_closed, PRF), 42.9e9, "bit/s")

    report = build_entropy_report(estimate, MEAN_U1, MEAN_U2, adc, PRF)
    _row(rows, "min-entropy, exact (worst grid offset)", report.h_exact, REFERENCE_ENTROPY, "bits")
    _row(rows, "min-entropy, ADC grid", report.h_adc_grid, None, "bits")
    _row(rows, "reduction factor", report.reduction_factor, 14 / REFERENCE_ENTROPY, "")
    _row(rows, "certified rate", report.bit_rate, 43e9, "bit/s")


def histogram_rows(rows):
    """Digitized simulator output against the arcsine-plus-noise code masses."""
    adc = AdcConfig()
    cfg = replace(InterferometerConfig(), visibility=0.9, arm_sigma=0.0)
    phases = np.random.default_rng(HISTOGRAM_SEED).uniform(0.0, 2 * np.pi, size=HISTOGRAM_PULSES + 1)
    records = simulate_pulse_records(phases, cfg, VAR_NOISE, HISTOGRAM_SEED)
    model = arcsine_bounds(MEAN_U1, MEAN_U2, cfg.visibility)
    fit = arcsine_histogram_fit(digitize(records.u_out, adc), model, adc, noise_variance=VAR_NOISE)
    _row(rows, "histogram chi-square p-value", fit.pvalue, None, "")
    _, arcsine_var = arcsine_moments(model)
    _row(rows, "var(u_out) / model", float(np.var(records.u_out)) / (arcsine_var + VAR_NOISE), 1.0, "")


def parse_args():
    parser = argparse.ArgumentParser(description="Reproduce the reference figures with pdqrng")
    parser.add_argument("--json", help="Also write the table to this JSON file")
    parser.add_argument("--skip-laser", action="store_true", help="Skip the rate-equation section")
    parser.add_argument("--skip-histogram", action="store_true", help="Skip the simulated histogram check")
    return parser.parse_args()


def main():
    args = parse_args()
    rows = []
    if not args.skip_laser:
        laser_rows(rows)
    entropy_rows(rows)
    if not args.skip_histogram:
        histogram_rows(rows)

    for row in rows:
        reference = "" if row["reference"] is None else f"(ref {row['reference']:.4g})"
        print(f"{row['quantity']:<40} {row['value']:>14.6g} {row['unit']:<6} {reference}")
    if args.json:
        write_json(args.json, {"rows": rows})
        print(f"Wrote {args.json}")


if __name__ == "__main__":
    main()
