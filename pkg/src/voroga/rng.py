"""Deterministic derivation of independent RNG streams from one master seed.

Every component (seeding, each island's GA, the link loss model) draws from
its own PCG64 stream, keyed by a fixed component id, so that runs replay
bit-identically and paired experiments can share exactly the streams they
are supposed to share.
"""

from __future__ import annotations

import numpy as np

STREAM_SEEDING = 0
STREAM_ISLAND = 1
STREAM_LINK = 2


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, key)."""
    if seed < 0:
        raise ValueError("rng seed must be a non-negative integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed, usable as the master seed of a sub-experiment."""
    if seed < 0:
        raise ValueError("rng seed must be a non-negative integer")
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])
