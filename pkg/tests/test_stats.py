#!/usr/bin/env python3
"""
Tests for the randomness test battery and the raw-signal diagnostics.
Single-sequence P-values are checked against the worked examples of the
SP 800-22 test descriptions.
"""

import csv
import math
import os
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.stats import kstest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import ValidationError
from core.formats import read_json
from stats import (
    DegenerateInputError, autocorrelation, autocorrelation_floor_db, block_frequency_test, cumulative_sums_test,
    incomplete_gamma_upper_regularized, monobit_test, proportion_interval, pvalue_uniformity, run_battery,
    runs_test, uniformity_deviation, write_battery_report,
)


def _bits(text: str) -> np.ndarray:
    return np.array([int(c) for c in text], dtype=np.uint8)


class TestSingleSequence(unittest.TestCase):
    def test_monobit_example(self):
        self.assertAlmostEqual(monobit_test(_bits("1011010101")), 0.527089, places=6)

    def test_block_frequency_example(self):
        self.assertAlmostEqual(block_frequency_test(_bits("0110011010"), block=3), 0.801252, places=6)

    def test_runs_example(self):
        self.assertAlmostEqual(runs_test(_bits("1001101011")), 0.147232, places=6)

    def test_runs_frequency_prerequisite(self):
        bits = np.ones(1000, dtype=np.uint8)
        bits[::10] = 0
        self.assertEqual(runs_test(bits), 0.0)

    def test_cumulative_sums_example(self):
        self.assertAlmostEqual(cumulative_sums_test(_bits("1011010111")), 0.4116588, delta=1e-6)

    def test_balanced_sequence_passes(self):
        bits = np.tile(np.array([0, 1], dtype=np.uint8), 500)
        self.assertEqual(monobit_test(bits), 1.0)

    def test_incomplete_gamma(self):
        self.assertAlmostEqual(incomplete_gamma_upper_regularized(1.0, 2.0), math.exp(-2.0))
        self.assertEqual(incomplete_gamma_upper_regularized(4.5, 0.0), 1.0)
        with self.assertRaises(ValidationError):
            incomplete_gamma_upper_regularized(0.0, 1.0)
        with self.assertRaises(ValidationError):
            incomplete_gamma_upper_regularized(1.0, -1.0)

    def test_incomplete_gamma_against_quadrature(self):
        for a, x in ((4.5, 3.2), (0.5, 0.1), (9.0, 12.0)):
            tail, _ = quad(lambda t: t ** (a - 1) * math.exp(-t), x, math.inf, epsabs=1e-14, epsrel=1e-12)
            self.assertLess(abs(incomplete_gamma_upper_regularized(a, x) - tail / math.gamma(a)), 1e-8)


class TestMetaStatistics(unittest.TestCase):
    def test_proportion_interval(self):
        lower, upper = proportion_interval(0.01, 1000)
        half = 3 * math.sqrt(0.99 * 0.01 / 1000)
        self.assertAlmostEqual(lower, 0.99 - half)
        self.assertAlmostEqual(upper, 0.99 + half)

    def test_evenly_spread_pvalues(self):
        p = (np.arange(100) + 0.5) / 100
        self.assertAlmostEqual(pvalue_uniformity(p), 1.0)

    def test_clustered_pvalues(self):
        self.assertLess(pvalue_uniformity(np.full(100, 0.05)), 1e-4)

    def test_uniform_under_null(self):
        """Uniform P-values give a uniformly distributed P-value_T."""
        rng = np.random.default_rng(33)
        values = [pvalue_uniformity(rng.uniform(size=1000)) for _ in range(400)]
        self.assertGreater(kstest(values, "uniform").pvalue, 0.01)

    def test_too_few_pvalues(self):
        with self.assertRaises(ValidationError):
            pvalue_uniformity(np.full(9, 0.5))


class TestBattery(unittest.TestCase):
    def setUp(self):
        self.bits = np.random.default_rng(21).integers(0, 2, size=20 * 2048, dtype=np.uint8)

    def test_structure(self):
        outcomes, summary = run_battery(self.bits, 2048)
        self.assertEqual(summary.sequences, 20)
        self.assertEqual(summary.s_count, 20)
        self.assertEqual(len(outcomes), 4 * 20)
        self.assertEqual([t.test_name for t in summary.tests],
                         ["monobit", "block_frequency", "runs", "cumulative_sums"])
        for o in outcomes:
            self.assertGreaterEqual(o.p_value, 0.0)
            self.assertLessEqual(o.p_value, 1.0)
            self.assertEqual(o.passed, o.p_value >= 0.01)

    def test_workers_do_not_change_results(self):
        single, _ = run_battery(self.bits, 2048, workers=1)
        pooled, _ = run_battery(self.bits, 2048, workers=3)
        self.assertEqual(single, pooled)

    def test_constant_stream_fails(self):
        _, summary = run_battery(np.zeros(20 * 256, dtype=np.uint8), 256)
        self.assertFalse(summary.all_passed)
        monobit = summary.tests[0]
        self.assertEqual(monobit.proportion, 0.0)
        self.assertFalse(monobit.proportion_ok)

    def test_few_sequences_skip_uniformity(self):
        _, summary = run_battery(self.bits[:5 * 2048], 2048)
        for t in summary.tests:
            self.assertTrue(math.isnan(t.p_value_t))
            self.assertTrue(t.uniformity_ok)

    def test_input_checks(self):
        with self.assertRaises(ValidationError):
            run_battery(self.bits, 64)
        with self.assertRaises(ValidationError):
            run_battery(self.bits[:3000], 2048)
        with self.assertRaises(ValidationError):
            run_battery(self.bits, 2048, significance=1.5)

    def test_report_files(self):
        outcomes, summary = run_battery(self.bits, 2048)
        with tempfile.TemporaryDirectory() as tmp:
            json_path, csv_path = write_battery_report(os.path.join(tmp, "battery.json"),
                                                       os.path.join(tmp, "battery.csv"), outcomes, summary)
            report = read_json(json_path)
            with open(csv_path, newline="") as f:
                rows = list(csv.reader(f))
        self.assertEqual(report["sequences"], 20)
        self.assertEqual(len(report["tests"]["runs"]["p_values"]), 20)
        self.assertEqual(rows[0], ["test", "proportion", "lower", "upper", "p_value_t"])
        self.assertEqual([r[0] for r in rows[1:]], ["monobit", "block_frequency", "runs", "cumulative_sums"])


class TestDiagnostics(unittest.TestCase):
    def test_white_noise_autocorrelation(self):
        x = np.random.default_rng(8).normal(size=100_000)
        r = autocorrelation(x, 50)
        self.assertEqual(r.size, 50)
        self.assertLess(float(np.max(np.abs(r))), 5 / math.sqrt(x.size))
        self.assertEqual(autocorrelation(x, 5, include_zero=True)[0], 1.0)

    def test_alternating_sequence(self):
        x = np.tile([1.0, -1.0], 500)
        r = autocorrelation(x, 2)
        self.assertAlmostEqual(r[0], -999 / 1000)
        self.assertAlmostEqual(r[1], 998 / 1000)

    def test_autocorrelation_checks(self):
        with self.assertRaises(DegenerateInputError):
            autocorrelation(np.ones(100), 5)
        with self.assertRaises(ValidationError):
            autocorrelation(np.arange(10.0), 10)

    def test_floor_in_db(self):
        self.assertAlmostEqual(autocorrelation_floor_db(np.array([1e-4, -2e-5])), -40.0)

    def test_symbol_deviation(self):
        symbols = np.random.default_rng(4).integers(0, 128, size=128_000)
        dev = uniformity_deviation(symbols, 7)
        self.assertEqual(dev.deviation.size, 128)
        self.assertAlmostEqual(float(dev.deviation.sum()), 0.0, places=12)
        self.assertAlmostEqual(dev.sigma, math.sqrt((1 / 128) * (127 / 128) / 128_000))
        self.assertLess(float(np.max(np.abs(dev.deviation))), 5 * dev.sigma)
        with self.assertRaises(ValidationError):
            uniformity_deviation(symbols[:100], 7)


if __name__ == "__main__":
    unittest.main()
