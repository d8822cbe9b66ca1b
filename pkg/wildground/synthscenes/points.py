"""Simulated LiDAR returns of actors and static ground clutter."""
from __future__ import annotations

import math
from typing import TYPE_CHECKING, List, Tuple

import numpy as np

from ..geometry.iou import points_in_box
from ..pointnet.cloud import PointCloud
from .actors import GROUND_Z, UMBRELLA_HEIGHT

if TYPE_CHECKING:
    from ..geometry.boxes import Box3D
    from .actors import Actor

MIN_ACTOR_POINTS = 80
MAX_ACTOR_POINTS = 300
DENSITY = 1600.0
"""Points of an actor at 1 m; the count decays with the inverse range."""

SHELL_MARGIN = 0.95
"""Fraction of the box half-extents the sampled shell may reach."""

HEAD_RADIUS = 0.6
"""Shell radius above shoulder height, as a fraction of the body radius."""

CLUTTER_POINTS = (300, 1200)
INTENSITY = (0.2, 0.8)


def actor_point_count(range_m: float) -> int:
    """Returns of an actor at ``range_m`` meters."""
    count = int(DENSITY / max(range_m, 1.0))
    return int(np.clip(count, MIN_ACTOR_POINTS, MAX_ACTOR_POINTS))


def _to_world(local: np.ndarray, box: Box3D) -> np.ndarray:
    cos, sin = math.cos(box.theta), math.sin(box.theta)
    x = box.x + cos * local[:, 0] - sin * local[:, 1]
    y = box.y + sin * local[:, 0] + cos * local[:, 1]
    return np.stack([x, y, box.z + local[:, 2]], axis=1)


def _shell(
    box: Box3D, body_height: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Local points on the sensor-facing side of a vertical capsule."""
    semi_l, semi_w = SHELL_MARGIN * box.l / 2, SHELL_MARGIN * box.w / 2
    bottom = -box.h / 2
    # direction from the actor to the sensor in the box frame
    cos, sin = math.cos(box.theta), math.sin(box.theta)
    to_sensor = np.array([-cos * box.x - sin * box.y, sin * box.x - cos * box.y])
    picked: List[np.ndarray] = []
    total = 0
    while total < count:
        angle = rng.uniform(0.0, 2 * math.pi, size=2 * count)
        normal = np.stack([np.cos(angle) / semi_l, np.sin(angle) / semi_w], axis=1)
        angle = angle[normal @ to_sensor > 0]
        height = rng.uniform(0.0, SHELL_MARGIN * body_height, size=len(angle))
        scale = np.where(height > 0.8 * body_height, HEAD_RADIUS, 1.0)
        picked.append(
            np.stack(
                [
                    scale * semi_l * np.cos(angle),
                    scale * semi_w * np.sin(angle),
                    bottom + height,
                ],
                axis=1,
            )
        )
        total += len(angle)
    return np.concatenate(picked)[:count]


def _cluster(
    center: Tuple[float, float, float],
    spread: float,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    return np.asarray(center) + rng.uniform(-spread, spread, size=(count, 3))


def actor_points(
    actor: Actor, frame: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Positions and intensities of one actor's returns in one frame.

    Every point lies inside the actor's box of that frame. A carried umbrella
    adds a canopy above the head, a bag a cluster at hip height and a waving
    arm a cluster at shoulder height that switches sides every frame.

    """
    box = actor.boxes[frame]
    count = actor_point_count(actor.range_m(frame))
    extra = count // 5 if actor.carried or actor.motion == "waving" else 0
    body_height = box.h - (UMBRELLA_HEIGHT if actor.carried == "umbrella" else 0.0)
    parts = [_shell(box, body_height, count - extra, rng)]
    bottom = -box.h / 2
    semi_w = box.w / 2
    if actor.motion == "waving":
        side = 1.0 if frame % 2 == 0 else -1.0
        share = extra if not actor.carried else extra // 2
        parts.append(
            _cluster(
                (0.0, side * 0.75 * semi_w, bottom + 0.8 * body_height), 0.1, share, rng
            )
        )
        extra -= share
    if actor.carried == "umbrella":
        radius = np.sqrt(rng.uniform(0.0, 1.0, size=extra)) * min(box.l, box.w) / 2
        angle = rng.uniform(0.0, 2 * math.pi, size=extra)
        top = box.h / 2 - rng.uniform(0.02, 0.1, size=extra)
        parts.append(np.stack([radius * np.cos(angle), radius * np.sin(angle), top], 1))
    elif actor.carried == "bag":
        parts.append(
            _cluster((0.0, 0.6 * semi_w, bottom + 0.45 * body_height), 0.12, extra, rng)
        )
    local = np.concatenate(parts)
    limit = SHELL_MARGIN * np.array([box.l / 2, box.w / 2, box.h / 2])
    local = np.clip(local, -limit, limit)
    intensity = rng.uniform(*INTENSITY, size=len(local))
    return _to_world(local, box), intensity


def clutter_points(
    boxes: List[Box3D], rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Static ground returns that stay clear of every actor box.

    Args:
        boxes: Actor boxes of every frame.
        rng: Scene generator.

    """
    count = int(rng.integers(*CLUTTER_POINTS))
    kept: List[np.ndarray] = []
    total = 0
    while total < count:
        xyz = np.stack(
            [
                rng.uniform(1.0, 32.0, size=count),
                rng.uniform(-16.0, 16.0, size=count),
                GROUND_Z + rng.uniform(0.0, 0.05, size=count),
            ],
            axis=1,
        )
        outside = np.ones(count, dtype=bool)
        for box in boxes:
            outside &= ~points_in_box(xyz, box)
        kept.append(xyz[outside])
        total += int(outside.sum())
    xyz = np.concatenate(kept)[:count]
    return xyz, rng.uniform(*INTENSITY, size=count)


def frame_cloud(
    actors: List[Actor],
    clutter: Tuple[np.ndarray, np.ndarray],
    frame: int,
    rng: np.random.Generator,
) -> PointCloud:
    """All returns of one frame, shuffled and rounded through float32."""
    sampled = [actor_points(actor, frame, rng) for actor in actors]
    xyz = np.concatenate([points for points, _ in sampled] + [clutter[0]])
    intensity = np.concatenate([values for _, values in sampled] + [clutter[1]])
    order = rng.permutation(len(xyz))
    return PointCloud(
        xyz[order].astype(np.float32),
        intensity[order].astype(np.float32),
        frame_time=frame,
    )
