"""
Counter-based random stream derivation.

A master seed plus a tuple of integer counters (stream id, trial index, ...)
fully determines a generator, so trials can be evaluated in any order and
still reproduce bit-for-bit.
"""
from enum import IntEnum
from typing import List

import numpy as np


class Stream(IntEnum):
    """Stream identifiers used as the first counter of every derivation"""
    NOISE = 1
    START_OFFSET = 2
    PHASE_NOISE_VICTIM = 3
    PHASE_NOISE_INTERFERER = 4
    PPP = 5
    SLOWCHIRP = 6
    CHANNEL_PROTOCOL = 7
    MAC_INIT = 8
    MAC_SYNC = 9
    MAC_ACCESS = 10
    OFDM_SYMBOLS = 11
    OFDM_NOISE = 12


def derive_seed(master_seed: int, *counters: int) -> np.random.SeedSequence:
    """Returns the SeedSequence addressed by (master_seed, counters)"""
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(c) for c in counters))


def derive_rng(master_seed: int, *counters: int) -> np.random.Generator:
    """Returns an independent generator for the given counter path"""
    return np.random.default_rng(derive_seed(master_seed, *counters))


def derive_int_seeds(master_seed: int, count: int, *counters: int) -> List[int]:
    """Returns `count` 32-bit integer seeds, e.g. for per-realization config objects"""
    words = derive_seed(master_seed, *counters).generate_state(count, dtype=np.uint32)
    return [int(w) for w in words]
