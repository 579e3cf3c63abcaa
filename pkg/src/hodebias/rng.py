"""Keyed random streams.

Every stream is a Philox (counter-based) generator seeded by a
``SeedSequence`` whose spawn key is the tuple of integer tags, so streams for
different tags are independent and a given ``(seed, tags)`` always yields the
same draws regardless of how many other streams exist or which process asks.
"""

from __future__ import annotations

import numpy as np

# stream tags
DATA = 1
PERMUTATION = 2
BOOTSTRAP = 3
REPLICATION = 4
ORACLE = 5

_MASK64 = (1 << 64) - 1


def _norm_tag(t) -> int:
    t = int(t)
    if t < 0:
        raise ValueError("stream tags must be non-negative")
    return t


def seed_sequence(seed: int, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(_norm_tag(t) for t in tags))


def stream(seed: int, *tags: int) -> np.random.Generator:
    """Independent generator for ``(seed, *tags)``."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *tags)))


def derive_seed(seed: int, *tags: int) -> int:
    """A 64-bit child seed for ``(seed, *tags)``."""
    return int(seed_sequence(seed, *tags).generate_state(1, dtype=np.uint64)[0])
