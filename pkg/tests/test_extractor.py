#!/usr/bin/env python3
"""
Tests for sample packing and hash-based extraction.
"""

import hashlib
import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from core.errors import ValidationError
from extractor import (
    DEFAULT_HASH, ExtractionConfig, ExtractionError, bits_to_symbols, block_output_bits, extract, pack_samples,
    resolve_hash, unpack_samples,
)


def _samples(count: int, seed: int = 0) -> np.ndarray:
    # Arcsine-shaped 14-bit codes: far from uniform
    phase = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=count)
    return np.floor(8000 + 5000 * np.cos(phase)).astype(np.int64)


class TestPacking(unittest.TestCase):
    def test_msb_first_layout(self):
        packed = pack_samples(np.array([0b10000000000001, 0b00000000000011]), 14)
        bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))
        self.assertEqual(len(packed), 4)
        self.assertEqual(bits[:14].tolist(), [1] + [0] * 12 + [1])
        self.assertEqual(bits[14:28].tolist(), [0] * 12 + [1, 1])
        self.assertEqual(bits[28:].tolist(), [0, 0, 0, 0])

    def test_unpack_inverts_pack(self):
        samples = _samples(1001)
        restored = unpack_samples(pack_samples(samples, 14), 14, samples.size)
        np.testing.assert_array_equal(restored, samples)

    def test_out_of_range_sample(self):
        with self.assertRaises(ValidationError):
            pack_samples(np.array([1 << 14]), 14)

    def test_symbols(self):
        bits = np.array([1, 0, 1, 1, 1, 1, 1, 0, 0])
        np.testing.assert_array_equal(bits_to_symbols(bits, 3), [5, 7, 4])
        self.assertEqual(bits_to_symbols(bits, 7).tolist(), [0b1011111])


class TestBlockContract(unittest.TestCase):
    def test_cumulative_floor(self):
        keep = block_output_bits(1000, 512, 1.9)
        self.assertEqual(int(keep.sum()), math.floor(1000 * 512 / 1.9))
        self.assertTrue(set(keep.tolist()) <= {269, 270})

    def test_unit_reduction_keeps_whole_digest(self):
        keep = block_output_bits(5, 512, 1.0)
        self.assertEqual(keep.tolist(), [512] * 5)


class TestExtraction(unittest.TestCase):
    def setUp(self):
        self.cfg = ExtractionConfig(input_bits_per_sample=14, reduction_factor=1.9)

    def test_default_hash(self):
        self.assertEqual(DEFAULT_HASH, "sha3_512")
        self.assertEqual(resolve_hash("sha512"), "sha512")
        with self.assertRaises(ExtractionError):
            resolve_hash("sha256")
        with self.assertRaises(ExtractionError):
            resolve_hash("no-such-digest")

    def test_output_length_and_tail(self):
        result = extract(_samples(100), self.cfg)
        self.assertEqual(result.blocks, 2)
        self.assertEqual(result.bits.size, math.floor(2 * 512 / 1.9))
        self.assertEqual(result.dropped_bits, 1400 - 1024)
        self.assertEqual(result.dropped_samples, 100 - 1024 // 14)

    def test_first_block_is_truncated_digest(self):
        samples = _samples(200)
        result = extract(samples, self.cfg)
        packed = pack_samples(samples, 14)
        digest = hashlib.sha3_512(packed[:64]).digest()
        expected = np.unpackbits(np.frombuffer(digest, dtype=np.uint8))[:269]
        np.testing.assert_array_equal(result.bits[:269], expected)

    def test_deterministic_across_workers(self):
        samples = _samples(20_000, seed=3)
        single = extract(samples, self.cfg)
        threaded = extract(samples, ExtractionConfig(14, 1.9, workers=4))
        np.testing.assert_array_equal(single.bits, threaded.bits)
        np.testing.assert_array_equal(single.bits, extract(samples, self.cfg).bits)

    def test_output_is_balanced(self):
        result = extract(_samples(80_000, seed=5), self.cfg)
        self.assertAlmostEqual(float(result.bits.mean()), 0.5, delta=0.005)

    def test_single_bit_flip_avalanches(self):
        """One flipped input bit changes about half of its block's output and nothing else."""
        samples = _samples(200, seed=6)
        base = extract(samples, self.cfg).bits
        fractions = []
        for i in range(32):
            for bit in (0, 7, 13):
                flipped = samples.copy()
                flipped[i] ^= 1 << bit
                bits = extract(flipped, self.cfg).bits
                changed = float(np.mean(bits[:269] != base[:269]))
                self.assertGreater(changed, 0.3)
                np.testing.assert_array_equal(bits[269:], base[269:])
                fractions.append(changed)
        self.assertAlmostEqual(float(np.mean(fractions)), 0.5, delta=0.03)

    def test_entropy_expansion_is_refused(self):
        with self.assertRaises(ExtractionError):
            extract(_samples(100), ExtractionConfig(14, 0.9))

    def test_digest_too_short_for_block(self):
        with self.assertRaises(ExtractionError):
            ExtractionConfig(14, 1.5, block_size=1024).validate()
        ExtractionConfig(14, 2.0, block_size=1024).validate()

    def test_too_few_samples(self):
        with self.assertRaises(ExtractionError):
            extract(_samples(10), self.cfg)

    def test_extraction_error_is_validation_error(self):
        self.assertTrue(issubclass(ExtractionError, ValidationError))


if __name__ == "__main__":
    unittest.main()
