"""Seed management for reproducible, parallelizable runs.

Every randomized routine takes either an explicit ``random.Random`` stream or
an integer master seed.  Substreams (one per Monte Carlo chain) are derived
from the master seed with ``numpy.random.SeedSequence``, which gives
well-separated child seeds independent of how the work is later distributed
over workers.
"""
from __future__ import annotations

import random

import numpy as np


def spawn_seeds(master_seed: int, count: int) -> list[int]:
    """Derive `count` independent child seeds from a master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(s) for s in ss.generate_state(count, dtype=np.uint64)]


def make_rng(seed: int) -> random.Random:
    """Scalar RNG used by the samplers (fast for one-at-a-time draws)."""
    return random.Random(seed)
