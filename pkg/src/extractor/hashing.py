#!/usr/bin/env python3
"""
Hash-based randomness extraction.

Samples are packed MSB-first into a bit string, cut into fixed-size blocks and
each block is hashed with a 512-bit digest. Block j keeps the leading
floor((j+1) B / RF) - floor(j B / RF) digest bits, so n blocks give exactly
floor(n B / RF) output bits.
"""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.errors import ValidationError
from core.logger import log_info, log_warning

DEFAULT_HASH = "sha3_512"
DIGEST_BITS = 512


class ExtractionError(ValidationError):
    """Raised when extraction would expand entropy or has nothing to hash"""
    pass


@dataclass(frozen=True)
class ExtractionConfig:
    input_bits_per_sample: int         # b
    reduction_factor: float            # RF = b / H
    hash_algorithm: str = DEFAULT_HASH
    block_size: int = 512              # input bits per hash invocation
    workers: int = 1

    @property
    def output_bits_per_sample(self) -> float:
        return self.input_bits_per_sample / self.reduction_factor

    def validate(self) -> None:
        if not 1 <= self.input_bits_per_sample <= 16:
            raise ExtractionError(f"input_bits_per_sample must lie in [1, 16] (got {self.input_bits_per_sample})")
        if not self.reduction_factor >= 1.0:
            raise ExtractionError(
                f"reduction factor {self.reduction_factor:.6g} < 1 would emit more bits than the certified entropy"
            )
        if self.block_size % 8 or self.block_size < DIGEST_BITS:
            raise ExtractionError(f"block_size must be a multiple of 8 and >= {DIGEST_BITS} bits")
        if math.ceil(self.block_size / self.reduction_factor) > DIGEST_BITS:
            raise ExtractionError(
                f"block_size {self.block_size} at RF {self.reduction_factor:.4g} needs more than {DIGEST_BITS} "
                "digest bits per block"
            )
        resolve_hash(self.hash_algorithm)


def resolve_hash(name: str) -> str:
    """Check the digest exists in this hashlib build and is 512 bits long."""
    try:
        digest_size = hashlib.new(name).digest_size
    except (ValueError, TypeError):
        raise ExtractionError(
            f"hash '{name}' not available (have: {', '.join(sorted(hashlib.algorithms_available))})"
        )
    if digest_size * 8 != DIGEST_BITS:
        raise ExtractionError(f"hash '{name}' has a {digest_size * 8}-bit digest; {DIGEST_BITS} required")
    return name


def pack_samples(samples: np.ndarray, b: int) -> bytes:
    """Low b bits of every sample, MSB-first, zero-padded to a byte boundary."""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        return b""
    if samples.min() < 0 or samples.max() >= (1 << b):
        raise ValidationError(f"samples must lie in [0, 2^{b})")
    shifts = np.arange(b - 1, -1, -1, dtype=np.int64)
    bits = ((samples[:, None] >> shifts) & 1).astype(np.uint8).ravel()
    return np.packbits(bits, bitorder="big").tobytes()


def unpack_samples(data: bytes, b: int, count: int) -> np.ndarray:
    """Inverse of pack_samples for the first `count` samples."""
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="big")
    if bits.size < count * b:
        raise ValidationError(f"{len(data)} bytes hold fewer than {count} samples of {b} bits")
    weights = 1 << np.arange(b - 1, -1, -1, dtype=np.int64)
    return bits[:count * b].reshape(count, b).astype(np.int64) @ weights


def bits_to_symbols(bits: np.ndarray, k: int) -> np.ndarray:
    """Group a bit stream into k-bit integers (MSB first); the tail is dropped."""
    bits = np.asarray(bits, dtype=np.int64)
    count = bits.size // k
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return bits[:count * k].reshape(count, k) @ weights


def block_output_bits(block_count: int, block_size: int, reduction_factor: float) -> np.ndarray:
    """Bits kept from each block under the cumulative-floor contract."""
    edges = np.floor(np.arange(block_count + 1) * (block_size / reduction_factor)).astype(np.int64)
    return np.diff(edges)


@dataclass(frozen=True)
class ExtractionResult:
    bits: np.ndarray          # uint8 0/1
    blocks: int
    dropped_bits: int         # packed input bits outside the last full block
    dropped_samples: int      # samples not wholly inside a hashed block


def _hash_blocks(name: str, blocks: List[Tuple[bytes, int]]) -> np.ndarray:
    out = []
    for data, keep in blocks:
        digest = np.unpackbits(np.frombuffer(hashlib.new(name, data).digest(), dtype=np.uint8), bitorder="big")
        out.append(digest[:keep])
    return np.concatenate(out) if out else np.empty(0, dtype=np.uint8)


def extract(samples: np.ndarray, cfg: ExtractionConfig) -> ExtractionResult:
    """Deterministic: same samples and config give the same bits."""
    cfg.validate()
    samples = np.asarray(samples, dtype=np.int64)
    b = cfg.input_bits_per_sample
    total_bits = samples.size * b
    blocks = total_bits // cfg.block_size
    if blocks < 1:
        raise ExtractionError(
            f"{samples.size} samples x {b} bits = {total_bits} bits; one block needs {cfg.block_size}"
        )
    packed = pack_samples(samples, b)
    block_bytes = cfg.block_size // 8
    keep = block_output_bits(blocks, cfg.block_size, cfg.reduction_factor)
    work = [(packed[j * block_bytes:(j + 1) * block_bytes], int(keep[j])) for j in range(blocks)]

    if cfg.workers > 1 and blocks > cfg.workers:
        step = math.ceil(blocks / cfg.workers)
        chunks = [work[i:i + step] for i in range(0, blocks, step)]
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            bits = np.concatenate(list(pool.map(lambda chunk: _hash_blocks(cfg.hash_algorithm, chunk), chunks)))
    else:
        bits = _hash_blocks(cfg.hash_algorithm, work)

    used_bits = blocks * cfg.block_size
    dropped_bits = total_bits - used_bits
    dropped_samples = samples.size - used_bits // b
    if dropped_bits:
        log_warning(f"Dropped trailing partial block: {dropped_bits} bits ({dropped_samples} samples)",
                    component="extractor")
    log_info(
        f"Extracted {bits.size} bits from {blocks} blocks ({cfg.hash_algorithm}, RF={cfg.reduction_factor:.4f})",
        component="extractor",
    )
    return ExtractionResult(bits=bits.astype(np.uint8), blocks=blocks, dropped_bits=dropped_bits,
                            dropped_samples=dropped_samples)
