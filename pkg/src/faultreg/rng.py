"""Named random streams split from one 64-bit seed.

All randomness goes through ``numpy.random.SeedSequence``: the seed is the
entropy and a CRC32 of the stream name is the spawn key, so each consumer
(scheduler, workload, faults, F sampling) gets an independent PCG64 stream that
does not shift when another consumer draws more numbers.
"""

import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(zlib.crc32(name.encode()),))
    return np.random.Generator(np.random.PCG64(ss))
