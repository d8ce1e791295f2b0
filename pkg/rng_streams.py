"""
Seeded random streams.

Every random draw in a run flows from one master seed. Independent purposes
(data generation, chain k=3, the jump sequence, EM restart 17) each get their
own numpy Generator derived through ``SeedSequence`` so that adding draws to
one purpose never shifts another.
"""

import zlib
from typing import List

import numpy as np


def purpose_key(purpose: str) -> int:
    """Stable 32-bit integer for a purpose label (crc32 is platform independent)."""
    return zlib.crc32(purpose.encode("utf-8"))


def substream(seed: int, purpose: str) -> np.random.Generator:
    """
    Get a generator for one named purpose under a master seed.

    Args:
        seed: Master seed
        purpose: Label such as ``"generate"`` or ``"jump"``

    Returns:
        numpy Generator instance
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), purpose_key(purpose)]))


def spawn_generators(seed: int, purpose: str, n: int) -> List[np.random.Generator]:
    """n pairwise independent generators for one purpose (one per chain, restart, ...)."""
    root = np.random.SeedSequence([int(seed), purpose_key(purpose)])
    return [np.random.default_rng(child) for child in root.spawn(n)]
