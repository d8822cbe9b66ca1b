"""Test wildground.synthscenes.seeds."""
from __future__ import annotations

import numpy as np

from wildground.synthscenes.seeds import MASK64, child_seed, scene_rng, splitmix64

MODULE = "wildground.synthscenes.seeds"


def test_child_seed_reference_stream() -> None:
    """Test the first outputs of the stream seeded with zero."""
    assert [child_seed(0, index) for index in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_child_seed_distinct() -> None:
    """Test child seeds of nearby masters and indices do not collide."""
    seeds = {child_seed(master, index) for master in range(20) for index in range(50)}
    assert len(seeds) == 20 * 50
    assert all(0 <= seed <= MASK64 for seed in seeds)


def test_splitmix64_wraps() -> None:
    """Test states beyond 64 bits are reduced first."""
    assert splitmix64(1 << 64) == splitmix64(0)
    assert splitmix64(0) == 0


def test_scene_rng() -> None:
    """Test scene generators depend only on master seed and index."""
    first = scene_rng(7, 3).random(4)
    np.testing.assert_array_equal(first, scene_rng(7, 3).random(4))
    assert not np.array_equal(first, scene_rng(7, 4).random(4))
