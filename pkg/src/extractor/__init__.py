"""Hash-based randomness extraction for pdqrng"""

from .hashing import (
    DEFAULT_HASH, ExtractionConfig, ExtractionError, ExtractionResult, bits_to_symbols, block_output_bits,
    extract, pack_samples, resolve_hash, unpack_samples,
)

__all__ = [
    "DEFAULT_HASH", "ExtractionConfig", "ExtractionError", "ExtractionResult", "bits_to_symbols",
    "block_output_bits", "extract", "pack_samples", "resolve_hash", "unpack_samples",
]
