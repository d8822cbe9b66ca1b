"""Per-scene seeds derived from one master seed."""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """Finalize a 64-bit state into a well mixed 64-bit value."""
    z = state & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(master: int, index: int) -> int:
    """The ``index``-th output of the splitmix64 stream started at ``master``."""
    return splitmix64(master + (index + 1) * GOLDEN_GAMMA)


def scene_rng(master: int, index: int) -> np.random.Generator:
    """Independent generator of scene ``index``."""
    return np.random.default_rng(child_seed(master, index))
