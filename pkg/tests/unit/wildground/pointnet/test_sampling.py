"""Test wildground.pointnet.sampling."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from wildground.exceptions import EmptyPointCloudError
from wildground.pointnet.sampling import ball_query, farthest_point_sample

if TYPE_CHECKING:
    from pytest import LogCaptureFixture

MODULE = "wildground.pointnet.sampling"

LINE = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [10, 0, 0], [5, 0, 0]])


def test_farthest_point_sample() -> None:
    """Test picks start at index 0 and maximize the distance to earlier picks."""
    assert farthest_point_sample(LINE, 3).tolist() == [0, 3, 4]


def test_farthest_point_sample_coverage() -> None:
    """Test every pick maximizes the distance to the ones before it."""
    rng = np.random.default_rng(0)
    xyz = rng.uniform(-1, 1, (200, 3))
    chosen = farthest_point_sample(xyz, 16)
    assert len(set(chosen.tolist())) == 16
    for i in range(1, 16):
        nearest = cdist(xyz, xyz[chosen[:i]]).min(axis=1)
        assert nearest[chosen[i]] == pytest.approx(nearest.max())


def test_farthest_point_sample_duplicates() -> None:
    """Test duplicate points are picked once before any repeat."""
    xyz = np.zeros((3, 3))
    assert sorted(farthest_point_sample(xyz, 3).tolist()) == [0, 1, 2]


def test_farthest_point_sample_repeats(caplog: LogCaptureFixture) -> None:
    """Test asking for more centers than points repeats the order."""
    caplog.set_level(logging.DEBUG, logger=MODULE)
    assert farthest_point_sample(LINE[:2], 5).tolist() == [0, 1, 0, 1, 0]
    assert "repeating" in caplog.text


def test_farthest_point_sample_errors() -> None:
    """Test an empty cloud and a non-positive count."""
    with pytest.raises(EmptyPointCloudError):
        farthest_point_sample(np.zeros((0, 3)), 4)
    with pytest.raises(ValueError, match="count must be positive"):
        farthest_point_sample(LINE, 0)


class TestBallQuery:
    """Test ball_query."""

    def test_index_order_and_padding(self) -> None:
        """Test neighbors come in index order and short groups repeat the first."""
        group = ball_query(LINE, LINE[[1]], 1.0, 5)
        assert group.tolist() == [[0, 1, 2, 0, 0]]

    def test_truncated(self) -> None:
        """Test groups stop at max_neighbors."""
        group = ball_query(LINE, LINE[[2]], 100.0, 2)
        assert group.tolist() == [[0, 1]]

    def test_radius_inclusive(self) -> None:
        """Test points exactly at the radius are inside."""
        assert ball_query(LINE, LINE[[0]], 2.0, 3).tolist() == [[0, 1, 2]]

    def test_empty_ball(self) -> None:
        """Test a center with no point in range uses its nearest point."""
        group = ball_query(LINE, np.array([[7.0, 0, 0]]), 0.5, 3)
        assert group.tolist() == [[4, 4, 4]]

    def test_wide_groups(self) -> None:
        """Test asking for more neighbors than points."""
        group = ball_query(LINE[:2], LINE[:1], 5.0, 4)
        assert group.tolist() == [[0, 1, 0, 0]]

    def test_against_distances(self) -> None:
        """Test every member lies within the radius."""
        rng = np.random.default_rng(1)
        xyz = rng.uniform(-1, 1, (300, 3))
        centers = xyz[farthest_point_sample(xyz, 8)]
        group = ball_query(xyz, centers, 0.4, 16)
        assert group.shape == (8, 16)
        distances = cdist(centers, xyz)
        for row, members in enumerate(group):
            assert np.all(distances[row, members] <= 0.4 + 1e-12)
