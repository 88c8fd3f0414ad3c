#!/usr/bin/env python3
"""
Tests for the interferometer model, visibility estimation and the ADC.
"""

import math
import os
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import ValidationError
from core.formats import read_columns
from interferometer import (
    AdcConfig, InterferometerConfig, LengthMismatchError, arm_powers, arm_statistics, bin_centres, digitize,
    estimate_visibility, interfere_pulse_train, sample_and_digitize, simulate_pulse_records, write_pulse_csv,
)
from interferometer.adc import PULSE_HEADER


class TestInterference(unittest.TestCase):
    def setUp(self):
        self.cfg = InterferometerConfig()

    def test_output_follows_interference_law(self):
        u1 = np.array([1e-3, 1e-3, 1e-3])
        u2 = np.array([0.5e-3, 0.5e-3, 0.5e-3])
        phases = np.array([0.0, 0.3, 1.7])
        records = interfere_pulse_train(u1, u2, phases, self.cfg)
        self.assertEqual(len(records), 2)
        np.testing.assert_array_equal(records.index, [1, 2])
        expected = u1[1:] + u2[1:] + 2 * 0.9 * np.sqrt(u1[1:] * u2[1:]) * np.cos(np.diff(phases))
        np.testing.assert_allclose(records.u_out, expected, rtol=1e-14)
        self.assertEqual(records.record(1).phase, 1.7)

    def test_equal_phases_give_constructive_interference(self):
        records = interfere_pulse_train(np.full(4, 1e-3), np.full(4, 1e-3), np.full(4, 0.25), self.cfg)
        np.testing.assert_allclose(records.u_out, 2e-3 + 2 * 0.9 * 1e-3)

    def test_output_is_never_negative(self):
        cfg = replace(self.cfg, visibility=1.0)
        records = interfere_pulse_train(np.full(3, 1e-3), np.full(3, 1e-3), np.array([0.0, math.pi, 0.0]), cfg,
                                        noise_variance=1e-8, seed=5)
        self.assertTrue(np.all(records.u_out >= 0.0))

    def test_output_within_energy_bound(self):
        """Without noise u_out never exceeds (sqrt(u1) + sqrt(u2))^2 nor falls below (sqrt(u1) - sqrt(u2))^2."""
        rng = np.random.default_rng(4)
        count = 10_001
        u1 = rng.uniform(0.5e-3, 1.5e-3, size=count)
        u2 = rng.uniform(0.5e-3, 1.5e-3, size=count)
        phases = rng.uniform(0.0, 2 * math.pi, size=count)
        cfg = replace(self.cfg, visibility=1.0)
        records = interfere_pulse_train(u1, u2, phases, cfg)
        upper = (np.sqrt(records.u1) + np.sqrt(records.u2)) ** 2
        lower = (np.sqrt(records.u1) - np.sqrt(records.u2)) ** 2
        self.assertTrue(np.all(records.u_out <= upper * (1 + 1e-12)))
        self.assertTrue(np.all(records.u_out >= lower * (1 - 1e-12) - 1e-18))

    def test_static_phase_does_not_change_statistics(self):
        """With randomized phases a static offset leaves the output distribution alone."""
        count = 200_001
        u1, u2 = np.full(count, 0.97e-3), np.full(count, 0.90e-3)
        base = interfere_pulse_train(u1, u2, np.random.default_rng(8).uniform(0.0, 2 * math.pi, size=count),
                                     self.cfg)
        shifted = interfere_pulse_train(u1, u2, np.random.default_rng(9).uniform(0.0, 2 * math.pi, size=count),
                                        replace(self.cfg, static_phase=1.234))
        self.assertAlmostEqual(float(np.mean(shifted.u_out) / np.mean(base.u_out)), 1.0, delta=0.01)
        self.assertAlmostEqual(float(np.var(shifted.u_out) / np.var(base.u_out)), 1.0, delta=0.02)

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatchError):
            interfere_pulse_train(np.ones(3), np.ones(4), np.zeros(3), self.cfg)

    def test_single_pulse_is_rejected(self):
        with self.assertRaises(ValidationError):
            interfere_pulse_train(np.ones(1), np.ones(1), np.zeros(1), self.cfg)

    def test_arm_powers_through_balanced_couplers(self):
        u1, u2 = arm_powers(4e-3, self.cfg)
        self.assertAlmostEqual(u1, 1e-3)
        self.assertAlmostEqual(u2, 1e-3)

    def test_config_validation(self):
        InterferometerConfig().validate(prf=5.825e9)
        with self.assertRaises(ValidationError):
            InterferometerConfig().validate(prf=1e9)
        with self.assertRaises(ValidationError):
            replace(self.cfg, coupler1=(0.9, 0.9)).validate()
        with self.assertRaises(ValidationError):
            replace(self.cfg, visibility=1.2).validate()


class TestChunkedGeneration(unittest.TestCase):
    def setUp(self):
        self.cfg = InterferometerConfig()
        self.phases = np.random.default_rng(0).normal(0.0, 10.0, size=5001)

    def test_chunking_and_workers_do_not_change_output(self):
        one = simulate_pulse_records(self.phases, self.cfg, 1.45e-10, seed=9, chunk_size=1000, workers=1)
        many = simulate_pulse_records(self.phases, self.cfg, 1.45e-10, seed=9, chunk_size=1000, workers=4)
        np.testing.assert_array_equal(one.u_out, many.u_out)
        np.testing.assert_array_equal(one.u1, many.u1)
        self.assertEqual(len(one), 5000)
        np.testing.assert_array_equal(one.index, np.arange(1, 5001))

    def test_seed_changes_output(self):
        a = simulate_pulse_records(self.phases, self.cfg, 1.45e-10, seed=1)
        b = simulate_pulse_records(self.phases, self.cfg, 1.45e-10, seed=2)
        self.assertFalse(np.array_equal(a.u_out, b.u_out))

    def test_arm_statistics_match_configuration(self):
        phases = np.random.default_rng(1).normal(0.0, 10.0, size=100_001)
        records = simulate_pulse_records(phases, self.cfg, 0.0, seed=4)
        stats = arm_statistics(records.u1, records.u2)
        self.assertAlmostEqual(stats.mean_u1, 0.97e-3, delta=1e-6)
        self.assertAlmostEqual(stats.mean_u2, 0.90e-3, delta=1e-6)
        self.assertAlmostEqual(math.sqrt(stats.var_u1), 45e-6, delta=1e-6)
        # Jensen: E[sqrt(u)]^2 <= E[u]
        self.assertLessEqual(stats.sqrt_mean_sq_u1, stats.mean_u1)


class TestVisibilityEstimate(unittest.TestCase):
    def test_recovers_configured_visibility(self):
        """Uniform phase steps: var(u_out) = var(u1) + var(u2) + 2 g^2 E[u1] E[u2] + noise."""
        cfg = InterferometerConfig()
        phases = np.random.default_rng(2).uniform(0.0, 2 * math.pi, size=400_001)
        records = simulate_pulse_records(phases, cfg, 1.45e-10, seed=11)
        stats = arm_statistics(records.u1, records.u2)
        estimate = estimate_visibility(float(np.var(records.u_out)), stats.var_u1, stats.var_u2, 1.45e-10,
                                       stats.sqrt_mean_sq_u1, stats.sqrt_mean_sq_u2)
        self.assertFalse(estimate.clamped)
        self.assertFalse(estimate.degenerate)
        self.assertAlmostEqual(estimate.value, 0.9, delta=0.01)

    def test_published_statistics(self):
        """Measured arm and output statistics give |g| close to 0.89."""
        estimate = estimate_visibility(1.4e-6, 2.0e-9, 2.1e-9, 1.45e-10, 0.97e-3, 0.90e-3)
        expected = math.sqrt((1.4e-6 - 2.0e-9 - 2.1e-9 - 1.45e-10) / (2 * 0.97e-3 * 0.90e-3))
        self.assertAlmostEqual(estimate.value, expected, places=12)
        self.assertGreaterEqual(estimate.value, 0.89)
        self.assertLessEqual(estimate.value, 0.91)

    def test_excess_variance_is_clamped(self):
        estimate = estimate_visibility(1e-5, 0.0, 0.0, 0.0, 1e-3, 1e-3)
        self.assertTrue(estimate.clamped)
        self.assertEqual(estimate.value, 1.0)
        self.assertGreater(estimate.raw, 1.0)

    def test_deficient_variance_is_degenerate(self):
        estimate = estimate_visibility(1e-9, 1e-9, 1e-9, 0.0, 1e-3, 1e-3)
        self.assertTrue(estimate.degenerate)
        self.assertEqual(estimate.value, 0.0)
        self.assertTrue(math.isnan(estimate.raw))

    def test_zero_denominator_is_rejected(self):
        with self.assertRaises(ValidationError):
            estimate_visibility(1e-6, 0.0, 0.0, 0.0, 0.0, 1e-3)


class TestAdc(unittest.TestCase):
    def setUp(self):
        self.adc = AdcConfig()

    def test_zero_anchored_bins(self):
        du = self.adc.bin_size
        power = np.array([-1e-3, 0.0, 0.99 * du, du, 2.5 * du, 5e-3, 1.0])
        np.testing.assert_array_equal(digitize(power, self.adc), [0, 0, 0, 1, 2, 16383, 16383])

    def test_bin_centres(self):
        self.assertAlmostEqual(float(bin_centres(np.array([0]), self.adc)[0]), 0.5 * self.adc.bin_size)

    def test_resolution_bounds(self):
        with self.assertRaises(ValidationError):
            AdcConfig(resolution=17).validate()
        with self.assertRaises(ValidationError):
            AdcConfig(resolution=0).validate()
        with self.assertRaises(ValidationError):
            AdcConfig(dynamic_range=0.0).validate()

    def test_pulse_csv(self):
        phases = np.linspace(0.0, 3.0, 11)
        records = simulate_pulse_records(phases, InterferometerConfig(), 1.45e-10, seed=3)
        bins = sample_and_digitize(records, self.adc)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_pulse_csv(os.path.join(tmp, "pulses.csv"), records, bins)
            cols = read_columns(path, PULSE_HEADER)
        np.testing.assert_array_equal(cols["bin"], bins)
        np.testing.assert_array_equal(cols["uout_w"], records.u_out)
        with self.assertRaises(ValidationError):
            write_pulse_csv(os.path.join(tempfile.gettempdir(), "unused.csv"), records, bins[:-1])


if __name__ == "__main__":
    unittest.main()
