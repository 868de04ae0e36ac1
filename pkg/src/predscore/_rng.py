"""Keyed seed derivation.

All randomness flows from one master seed through ``SeedSequence`` spawn keys,
so a stream depends only on (seed, key path) and never on call order or
thread scheduling.
"""

import numpy as np

# stream labels; stable across versions
FOLDS = 1
FOLDS_PRIME = 2
TRAIN = 3
BOOTSTRAP = 4
REBALANCE = 5
SETTING = 6
COHORT = 7
REP = 8
GRID_PRIME = 9
ROW = 10
CELL = 11


def rng_for(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def child_seed(seed, *keys):
    """A 63-bit integer seed for the stream at ``keys`` below ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
