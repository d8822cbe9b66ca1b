"""Test wildground.synthscenes.points."""
# pylint: disable=no-self-use
from __future__ import annotations

import numpy as np
import pytest

from wildground.geometry.iou import points_in_box
from wildground.synthscenes.points import (
    MAX_ACTOR_POINTS,
    MIN_ACTOR_POINTS,
    actor_point_count,
    actor_points,
    clutter_points,
    frame_cloud,
)

from ...factories import make_actor

MODULE = "wildground.synthscenes.points"


@pytest.mark.parametrize(
    "range_m, expected",
    [(0.5, MAX_ACTOR_POINTS), (8.0, 200), (16.0, 100), (30.0, MIN_ACTOR_POINTS)],
)
def test_actor_point_count(range_m: float, expected: int) -> None:
    """Test the count falls with range between its limits."""
    assert actor_point_count(range_m) == expected


class TestActorPoints:
    """Test actor_points."""

    @pytest.mark.parametrize(
        "motion, carried",
        [
            ("standing", None),
            ("waving", "umbrella"),
            ("sitting", "bag"),
            ("waving", None),
        ],
    )
    def test_inside_box(
        self, motion: str, carried: str, rng: np.random.Generator
    ) -> None:
        """Test every return lies inside the actor's box."""
        actor = make_actor(0, motion=motion, carried=carried, x=8.0, y=-2.0)
        xyz, intensity = actor_points(actor, 0, rng)
        assert len(xyz) == len(intensity) == actor_point_count(actor.range_m())
        assert points_in_box(xyz, actor.box).all()
        assert ((intensity >= 0.2) & (intensity <= 0.8)).all()

    def test_waving_switches_sides(self, rng: np.random.Generator) -> None:
        """Test the waving arm moves to the other side on odd frames."""
        actor = make_actor(0, motion="waving", frames=2)
        even, _ = actor_points(actor, 0, rng)
        odd, _ = actor_points(actor, 1, rng)
        shoulder = actor.box.z - actor.box.h / 2 + 0.8 * actor.box.h
        arm_even = even[np.abs(even[:, 2] - shoulder) < 0.05]
        arm_odd = odd[np.abs(odd[:, 2] - shoulder) < 0.05]
        assert arm_even[:, 1].mean() > arm_odd[:, 1].mean()


def test_clutter_points(rng: np.random.Generator) -> None:
    """Test clutter stays clear of every actor box."""
    boxes = [make_actor(i, x=5.0 + 4 * i).box for i in range(4)]
    xyz, intensity = clutter_points(boxes, rng)
    assert 300 <= len(xyz) < 1200
    assert len(intensity) == len(xyz)
    for box in boxes:
        assert not points_in_box(xyz, box).any()


def test_frame_cloud(rng: np.random.Generator) -> None:
    """Test a frame holds every actor's returns plus the clutter."""
    actors = [make_actor(0, x=6.0), make_actor(1, x=14.0, y=5.0)]
    clutter = clutter_points([actor.box for actor in actors], rng)
    cloud = frame_cloud(actors, clutter, 0, rng)
    expected = sum(actor_point_count(a.range_m()) for a in actors) + len(clutter[0])
    assert len(cloud) == expected
    assert cloud.frame_time == 0
    np.testing.assert_array_equal(cloud.xyz, cloud.xyz.astype(np.float32))
    for actor in actors:
        assert points_in_box(cloud.xyz, actor.box).sum() == actor_point_count(
            actor.range_m()
        )
