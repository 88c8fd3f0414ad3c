#!/usr/bin/env python3
"""
On-disk formats shared by the stages: CSV columns at full precision, 16-bit
little-endian sample files and MSB-first packed bit streams.
"""

import json
import math
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.errors import ValidationError

FULL_PRECISION = "%.17g"


class FormatError(ValidationError):
    """Raised when an input file does not match its documented format"""
    pass


def write_columns(path: str, header: Sequence[str], columns: Sequence[np.ndarray],
                  formats: Optional[Sequence[str]] = None) -> str:
    """Write equal-length columns as CSV with a one-line header."""
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        raise FormatError(f"column lengths differ: {sorted(lengths)}")
    fmt = list(formats) if formats else [FULL_PRECISION] * len(columns)
    if lengths and lengths != {0}:
        table = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    else:
        table = np.empty((0, len(columns)))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt=fmt)
    return path


def read_columns(path: str, expected_header: Sequence[str]) -> Dict[str, np.ndarray]:
    """Read a CSV written by write_columns (or by hand) into named arrays."""
    if not os.path.exists(path):
        raise FormatError(f"file not found: {path}")
    with open(path, "r") as f:
        header = f.readline().strip().split(",")
    header = [h.strip() for h in header]
    if header != list(expected_header):
        raise FormatError(f"{path}: expected header {','.join(expected_header)}, got {','.join(header)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, i] for i, name in enumerate(header)}


def write_u16le(path: str, codes: np.ndarray) -> str:
    """Sample codes as little-endian unsigned 16-bit integers."""
    codes = np.asarray(codes)
    if codes.size and (codes.min() < 0 or codes.max() > 0xFFFF):
        raise FormatError("sample codes do not fit in 16 bits")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(codes.astype("<u2").tobytes())
    return path


def read_u16le(path: str, resolution: Optional[int] = None) -> np.ndarray:
    if not os.path.exists(path):
        raise FormatError(f"file not found: {path}")
    raw = np.fromfile(path, dtype="<u2")
    codes = raw.astype(np.int64)
    if resolution is not None:
        # Only the low b bits are significant
        codes &= (1 << resolution) - 1
    return codes


def write_packed_bits(path: str, bits: np.ndarray) -> str:
    """Bit array (0/1) as bytes, most significant bit first, zero tail pad."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="big").tobytes())
    return path


def read_packed_bits(path: str, bit_count: Optional[int] = None) -> np.ndarray:
    if not os.path.exists(path):
        raise FormatError(f"file not found: {path}")
    data = np.fromfile(path, dtype=np.uint8)
    bits = np.unpackbits(data, bitorder="big")
    if bit_count is not None:
        if bit_count > bits.size:
            raise FormatError(f"{path}: holds {bits.size} bits, {bit_count} requested")
        bits = bits[:bit_count]
    return bits


def write_text_bits(path: str, bits: np.ndarray, line_width: int = 64) -> str:
    chars = np.where(np.asarray(bits, dtype=np.uint8) > 0, "1", "0")
    lines: List[str] = ["".join(chars[i:i + line_width]) for i in range(0, chars.size, line_width)]
    with open(path, "w") as f:
        f.write("\n".join(lines))
        if lines:
            f.write("\n")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _finite_or_none(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    return obj


def write_json(path: str, payload: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    cleaned = _finite_or_none(json.loads(json.dumps(payload, default=_json_default)))
    with open(path, "w") as f:
        json.dump(cleaned, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_json(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise FormatError(f"file not found: {path}")
    with open(path, "r") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON in {path}: {e}")
