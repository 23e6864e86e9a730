"""Seeded random streams.

All stochastic calls take an explicit ``numpy.random.Generator`` built on the
counter-based Philox bit generator, so every stream is reproducible from its
seed and independent sub-streams can be split off deterministically.
"""

import numpy as np


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def child_seeds(seed, n):
    """``n`` reproducible 63-bit seeds derived from ``seed``."""
    ss = np.random.SeedSequence(int(seed))
    return [int(s.generate_state(1, np.uint64)[0] >> np.uint64(1)) for s in ss.spawn(n)]
