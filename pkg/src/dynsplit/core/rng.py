"""Named, order-independent random streams.

Every consumer of randomness asks for its own generator keyed by
``(seed, purpose, *indices)``; no stream is shared across devices or steps, so
the scheduling order of device work never changes the numbers drawn.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_tag(purpose), *(int(i) for i in indices)))
    return np.random.Generator(np.random.PCG64(ss))
