#!/usr/bin/env python3
"""
Tests for the arcsine output model, min-entropy certification and the
entropy report.
"""

import math
import os
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.integrate import quad

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import ValidationError
from core.formats import read_json, write_json
from entropy import (
    ArcsineModel, EntropyReport, NarrowDistributionError, anchored_arcsine_masses, arcsine_bounds,
    arcsine_histogram_fit, arcsine_moments, build_entropy_report, digitized_arcsine_masses, first_bin_probability,
    min_entropy_closed_form, min_entropy_exact, randomness_rate,
)
from interferometer import (
    AdcConfig, InterferometerConfig, VisibilityEstimate, digitize, estimate_visibility, interfere_pulse_train,
    simulate_pulse_records,
)

PRF = 5.825e9
SPAN = 3.34e-3


def _estimate(value: float) -> VisibilityEstimate:
    return VisibilityEstimate(value=value, raw=value, clamped=False, degenerate=False)


class TestArcsineModel(unittest.TestCase):
    def test_bounds_from_arm_means(self):
        model = arcsine_bounds(0.97e-3, 0.90e-3, 0.90)
        self.assertAlmostEqual(model.span, 4 * 0.90 * math.sqrt(0.97e-3 * 0.90e-3))
        self.assertAlmostEqual(model.span / SPAN, 1.0, delta=0.01)
        self.assertAlmostEqual(0.5 * (model.u_min + model.u_max), 1.87e-3)

    def test_moments(self):
        model = ArcsineModel(1e-3, 3e-3)
        mean, var = arcsine_moments(model)
        self.assertAlmostEqual(mean, 2e-3)
        self.assertAlmostEqual(var, (2e-3) ** 2 / 8)

    def test_cdf_limits(self):
        model = ArcsineModel(1e-3, 3e-3)
        np.testing.assert_allclose(model.cdf(np.array([0.0, 1e-3, 2e-3, 3e-3, 1.0])), [0.0, 0.0, 0.5, 1.0, 1.0])

    def test_inverted_bounds_are_rejected(self):
        with self.assertRaises(ValidationError):
            ArcsineModel(2e-3, 1e-3)

    def test_variance_oracle(self):
        """Uniform phase steps reproduce var(u_out) = span^2 / 8."""
        cfg = replace(InterferometerConfig(), visibility=0.9)
        count = 400_001
        phases = np.random.default_rng(12).uniform(0.0, 2 * math.pi, size=count)
        records = interfere_pulse_train(np.full(count, 0.97e-3), np.full(count, 0.90e-3), phases, cfg)
        _, expected = arcsine_moments(arcsine_bounds(0.97e-3, 0.90e-3, 0.9))
        # Relative standard error of a sample variance of arcsine data is sqrt(0.5 / N)
        tolerance = 3 * math.sqrt(0.5 / count)
        self.assertAlmostEqual(float(np.var(records.u_out)) / expected, 1.0, delta=tolerance)


class TestArcsineHistogram(unittest.TestCase):
    """Digitized simulator output against the arcsine-plus-noise code masses."""

    NOISE = 1.45e-10

    @classmethod
    def setUpClass(cls):
        cls.adc = AdcConfig()
        cls.model = arcsine_bounds(0.97e-3, 0.90e-3, 0.9)
        cls.count = 200_000
        cls.phases = np.random.default_rng(21).uniform(0.0, 2 * math.pi, size=cls.count + 1)

    def _records(self, arm_sigma: float):
        cfg = replace(InterferometerConfig(), visibility=0.9, arm_sigma=arm_sigma)
        return simulate_pulse_records(self.phases, cfg, self.NOISE, seed=21)

    def test_histogram_matches_model(self):
        codes = digitize(self._records(0.0).u_out, self.adc)
        fit = arcsine_histogram_fit(codes, self.model, self.adc, noise_variance=self.NOISE)
        self.assertGreater(fit.pvalue, 0.01)
        self.assertEqual(fit.samples, self.count)
        self.assertGreater(fit.cells, 1000)

    def test_wrong_visibility_is_rejected(self):
        codes = digitize(self._records(0.0).u_out, self.adc)
        narrower = arcsine_bounds(0.97e-3, 0.90e-3, 0.8)
        fit = arcsine_histogram_fit(codes, narrower, self.adc, noise_variance=self.NOISE)
        self.assertLess(fit.pvalue, 1e-6)

    def test_output_variance_matches_model(self):
        """var(u_out) = span^2/8 + var(u1) + var(u2) + var(noise)."""
        sigma = 45e-6
        records = self._records(sigma)
        _, arcsine_var = arcsine_moments(self.model)
        expected = arcsine_var + 2 * sigma ** 2 + self.NOISE
        self.assertAlmostEqual(float(np.var(records.u_out)) / expected, 1.0, delta=0.05)

    def test_input_checks(self):
        with self.assertRaises(ValidationError):
            arcsine_histogram_fit(np.array([], dtype=int), self.model, self.adc)
        with self.assertRaises(ValidationError):
            arcsine_histogram_fit(np.array([1 << 14]), self.model, self.adc)
        # Ten samples cannot fill two cells of five expected counts
        with self.assertRaises(ValidationError):
            arcsine_histogram_fit(np.arange(10), self.model, self.adc)


class TestMinEntropy(unittest.TestCase):
    def setUp(self):
        self.adc = AdcConfig(resolution=14, dynamic_range=5e-3)

    def test_closed_form_matches_published_value(self):
        h = min_entropy_closed_form(self.adc, SPAN)
        self.assertGreaterEqual(h, 7.28)
        self.assertLessEqual(h, 7.38)
        rate = randomness_rate(h, PRF)
        self.assertGreaterEqual(rate, 42.4e9)
        self.assertLessEqual(rate, 43.0e9)

    def test_first_bin_probability(self):
        model = ArcsineModel(1e-3, 1e-3 + SPAN)
        p = first_bin_probability(model, self.adc)
        self.assertAlmostEqual(p, (2 / math.pi) * math.asin(math.sqrt(5e-3 / (16384 * SPAN))), places=15)

    def test_first_bin_against_quadrature(self):
        model = ArcsineModel(1e-3, 1e-3 + SPAN)
        du = self.adc.bin_size
        # Algebraic weight (u - u_min)^-1/2 carries the edge singularity
        mass, _ = quad(lambda u: 1.0 / (math.pi * math.sqrt(model.u_max - u)), model.u_min, model.u_min + du,
                       weight="alg", wvar=(-0.5, 0.0), epsabs=1e-15)
        self.assertLess(abs(first_bin_probability(model, self.adc) - mass), 1e-10)

    def test_exact_entropy_on_aligned_grid(self):
        """With u_min on a bin edge the first bin is the most probable code."""
        u_min = 1311 * self.adc.bin_size
        model = ArcsineModel(u_min, u_min + SPAN)
        masses = digitized_arcsine_masses(model, self.adc)
        self.assertEqual(masses.size, self.adc.levels)
        self.assertAlmostEqual(float(masses.sum()), 1.0, places=12)
        self.assertTrue(np.all(masses >= 0.0))
        self.assertEqual(int(np.argmax(masses)), 1311)
        h = min_entropy_exact(masses)
        self.assertAlmostEqual(h, -math.log2(first_bin_probability(model, self.adc)), places=6)
        self.assertLess(abs(h - min_entropy_closed_form(self.adc, SPAN)), 0.05)

    def test_exact_and_closed_form_agree_off_grid(self):
        for resolution in (10, 12, 14):
            adc = AdcConfig(resolution=resolution, dynamic_range=5e-3)
            for span in (2e-3, SPAN):
                for offset in (0.0, 0.37, 0.5, 0.81):
                    u_min = 1e-3 + offset * adc.bin_size
                    model = ArcsineModel(u_min, u_min + span)
                    h = min_entropy_exact(anchored_arcsine_masses(model, adc))
                    with self.subTest(b=resolution, span=span, offset=offset):
                        self.assertLess(abs(h - min_entropy_closed_form(adc, span)), 0.1)
                        grid = min_entropy_exact(digitized_arcsine_masses(model, adc))
                        self.assertGreaterEqual(grid, h - 1e-9)

    def test_anchored_masses(self):
        model = ArcsineModel(1e-3 + 0.3 * self.adc.bin_size, 1e-3 + SPAN)
        masses = anchored_arcsine_masses(model, self.adc)
        self.assertAlmostEqual(float(masses.sum()), 1.0, places=12)
        self.assertEqual(masses.size, math.ceil(model.span / self.adc.bin_size))
        self.assertEqual(int(np.argmax(masses)), 0)
        self.assertAlmostEqual(float(masses[0]), first_bin_probability(model, self.adc), places=12)
        with self.assertRaises(NarrowDistributionError):
            anchored_arcsine_masses(ArcsineModel(1e-3, 1e-3 + 0.5 * self.adc.bin_size), self.adc)

    def test_noise_never_lowers_entropy(self):
        model = arcsine_bounds(0.97e-3, 0.90e-3, 0.9)
        clean = min_entropy_exact(digitized_arcsine_masses(model, self.adc))
        noisy_masses = digitized_arcsine_masses(model, self.adc, noise_variance=1.45e-10)
        self.assertAlmostEqual(float(noisy_masses.sum()), 1.0, places=9)
        self.assertGreaterEqual(min_entropy_exact(noisy_masses), clean - 1e-9)

    def test_entropy_bounded_by_resolution(self):
        uniform = np.full(self.adc.levels, 1.0 / self.adc.levels)
        self.assertAlmostEqual(min_entropy_exact(uniform), 14.0)

    def test_mass_function_checks(self):
        with self.assertRaises(ValidationError):
            min_entropy_exact(np.array([0.5, 0.4]))
        with self.assertRaises(ValidationError):
            min_entropy_exact(np.array([1.5, -0.5]))
        with self.assertRaises(ValidationError):
            min_entropy_exact(np.array([]))

    def test_span_below_one_bin(self):
        model = ArcsineModel(1e-3, 1e-3 + 0.5 * self.adc.bin_size)
        with self.assertRaises(NarrowDistributionError):
            first_bin_probability(model, self.adc)


class TestEntropyReport(unittest.TestCase):
    def setUp(self):
        self.adc = AdcConfig()

    def test_report_fields(self):
        report = build_entropy_report(_estimate(0.9), 0.97e-3, 0.90e-3, self.adc, PRF)
        self.assertEqual(report.entropy_basis, "exact")
        self.assertAlmostEqual(report.reduction_factor, 14 / report.h_exact)
        self.assertAlmostEqual(report.bit_rate, report.h_exact * PRF)
        self.assertGreater(report.reduction_factor, 1.0)
        self.assertLess(abs(report.h_exact - report.h_closed_form), 0.01)
        # The real grid only splits the most probable bin, so its value never falls below h_exact
        self.assertGreaterEqual(report.h_adc_grid, report.h_exact - 1e-9)
        self.assertEqual(report.warning, "")

    def test_measured_statistics_give_published_rate(self):
        estimate = estimate_visibility(1.4e-6, 2.0e-9, 2.1e-9, 1.45e-10, 0.97e-3, 0.90e-3)
        report = build_entropy_report(estimate, 0.97e-3, 0.90e-3, self.adc, PRF)
        self.assertLess(abs(report.certified_entropy - 7.33), 0.1)
        self.assertGreaterEqual(report.reduction_factor, 1.85)
        self.assertLessEqual(report.reduction_factor, 1.95)
        self.assertGreaterEqual(report.bit_rate, 42.4e9)
        self.assertLessEqual(report.bit_rate, 43.4e9)

    def test_closed_form_basis(self):
        report = build_entropy_report(_estimate(0.9), 0.97e-3, 0.90e-3, self.adc, PRF, entropy_basis="closed_form")
        self.assertEqual(report.certified_entropy, report.h_closed_form)
        self.assertAlmostEqual(report.reduction_factor, 14 / report.h_closed_form)

    def test_unknown_basis_is_rejected(self):
        with self.assertRaises(ValidationError):
            build_entropy_report(_estimate(0.9), 0.97e-3, 0.90e-3, self.adc, PRF, entropy_basis="mean")

    def test_clamped_estimate_is_flagged(self):
        estimate = VisibilityEstimate(value=1.0, raw=1.2, clamped=True, degenerate=False)
        report = build_entropy_report(estimate, 0.97e-3, 0.90e-3, self.adc, PRF)
        self.assertTrue(report.visibility_clamped)
        self.assertIn("clamped", report.warning)

    def test_zero_visibility_cannot_be_certified(self):
        estimate = VisibilityEstimate(value=0.0, raw=float("nan"), clamped=False, degenerate=True)
        with self.assertRaises(NarrowDistributionError):
            build_entropy_report(estimate, 0.97e-3, 0.90e-3, self.adc, PRF)

    def test_save_and_load(self):
        report = build_entropy_report(_estimate(0.85), 0.97e-3, 0.90e-3, self.adc, PRF,
                                      provenance={"var_out": "test"})
        with tempfile.TemporaryDirectory() as tmp:
            path = report.save(os.path.join(tmp, "entropy_report.json"))
            loaded = EntropyReport.load(path)
            self.assertEqual(loaded, report)

            data = read_json(path)
            del data["h_exact"]
            broken = write_json(os.path.join(tmp, "broken.json"), data)
            with self.assertRaises(ValidationError):
                EntropyReport.load(broken)


if __name__ == "__main__":
    unittest.main()
