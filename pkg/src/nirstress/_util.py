"""Small shared helpers."""

from __future__ import annotations

import math

import numpy as np


def round_half_away(x: float) -> int:
    """Round to the nearest integer with ties going away from zero.

    Python's built-in ``round`` rounds ties to even, which is the wrong
    convention for sample counts and keep-fraction arithmetic here.
    """
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def readonly(a: np.ndarray) -> np.ndarray:
    """Return a C-contiguous float64 copy marked read-only."""
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


def substream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic Philox substream addressed by an integer key path."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key))
    )


def derive_seed(*parts: int) -> int:
    """Collapse a key path into a single reproducible 63-bit seed."""
    ss = np.random.SeedSequence(entropy=list(parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)
