"""Seed derivation used across the package.

All randomness flows from numpy SeedSequence/PCG64 streams. Substreams are
derived by extending the spawn key with small integers, so every component
draw is reproducible from one top-level seed regardless of execution order.
"""

from __future__ import annotations

import numpy as np

Seed = "int | np.random.SeedSequence"


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def child(seed, *key: int) -> np.random.SeedSequence:
    """Substream of a seed, addressed by a tuple of small integers."""
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(entropy=ss.entropy,
                                  spawn_key=tuple(ss.spawn_key) + tuple(key))


def generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))
