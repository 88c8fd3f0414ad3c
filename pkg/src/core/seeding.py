#!/usr/bin/env python3
"""
Counter-based random substreams.

Every random draw in a run descends from one 64-bit seed. A stream is
identified by (stage, chunk); the pair becomes the SeedSequence spawn key and
feeds a Philox generator, so a chunk's numbers never depend on how many
workers produced the chunks before it.
"""

from typing import Dict

import numpy as np

# Stage keys are part of the on-disk contract (the manifest records them);
# never renumber.
STAGE_KEYS: Dict[str, int] = {
    "phases": 0,
    "arm_u1": 1,
    "arm_u2": 2,
    "detector_noise": 3,
}

SEED_MASK = (1 << 64) - 1


def substream(seed: int, stage: str, chunk: int = 0) -> np.random.Generator:
    """Generator for one (stage, chunk) pair of a run seeded with `seed`."""
    if stage not in STAGE_KEYS:
        raise KeyError(f"unknown random stage '{stage}'")
    sequence = np.random.SeedSequence(
        entropy=int(seed) & SEED_MASK, spawn_key=(STAGE_KEYS[stage], int(chunk))
    )
    return np.random.Generator(np.random.Philox(sequence))


def describe_scheme(seed: int) -> Dict[str, object]:
    """Manifest entry documenting how substreams were derived."""
    return {
        "seed": int(seed) & SEED_MASK,
        "bit_generator": "Philox",
        "derivation": "SeedSequence(entropy=seed, spawn_key=(stage, chunk))",
        "stages": dict(STAGE_KEYS),
    }
