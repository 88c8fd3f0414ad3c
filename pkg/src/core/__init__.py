"""Core runtime components for pdqrng"""

from .errors import (
    PdqrngError, ValidationError, StageError, CertificationError, exit_code_for,
)
from .manifest import RunManifest
from .seeding import substream, describe_scheme

__all__ = [
    "PdqrngError", "ValidationError", "StageError", "CertificationError", "exit_code_for",
    "RunManifest", "substream", "describe_scheme",
]
