"""Actors and their motion through the frames of a scene."""
# pylint: disable=no-self-argument,no-self-use
from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple, cast

import numpy as np
from pydantic import validator

from ..constants import PERCEPTION_RADIUS
from ..geometry.boxes import Box3D
from ..models.base import BaseModel
from ..type_defs import CarriedName, ColorName, MotionName

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

COLORS: Dict[str, Tuple[int, int, int]] = {
    "red": (220, 40, 40),
    "green": (40, 200, 60),
    "blue": (50, 80, 230),
    "yellow": (230, 220, 50),
    "white": (245, 245, 245),
    "black": (20, 20, 20),
}
"""Render color of every color name."""

MOTIONS: Tuple[str, ...] = ("standing", "walking", "riding", "sitting", "waving")
CARRIED: Tuple[str, ...] = ("umbrella", "bag")

GROUND_Z = -1.7
"""Ground height below the sensor in meters."""

MIN_SEPARATION = 1.5
MIN_ACTORS = 3
MAX_ACTORS = 8
UMBRELLA_HEIGHT = 0.3

STATIC_JITTER = 0.04
"""Largest per-frame drift of actors that do not travel."""

TRAVEL: Dict[str, Tuple[float, float]] = {
    "walking": (0.4, 1.0),
    "riding": (1.5, 3.0),
}
"""Per-frame displacement range of travelling motions."""

X_LIMITS = (1.0, 31.0)
Y_LIMIT = 15.0
"""Every actor stays this far inside the rendered view in every frame."""

HEADING_LIMIT = 3.14


class Actor(BaseModel):
    """One person in a scene."""

    actor_id: int
    color: ColorName
    motion: MotionName
    carried: Optional[CarriedName] = None

    boxes: List[Box3D]
    """Box in every frame, oldest first."""

    @validator("actor_id")
    def _check_id(cls, v: int) -> int:
        if not 0 <= v < 2**16:
            raise ValueError("actor id must fit in 16 bits")
        return v

    @validator("boxes")
    def _check_boxes(cls, v: List[Box3D]) -> List[Box3D]:
        if not v:
            raise ValueError("an actor needs a box in at least one frame")
        return v

    @property
    def box(self) -> Box3D:
        """Box in the newest frame."""
        return self.boxes[-1]

    def range_m(self, frame: int = -1) -> float:
        """Ground distance from the sensor."""
        box = self.boxes[frame]
        return math.hypot(box.x, box.y)

    def displacement(self, frame: int) -> float:
        """Ground distance moved between ``frame - 1`` and ``frame``."""
        before, after = self.boxes[frame - 1], self.boxes[frame]
        return math.hypot(after.x - before.x, after.y - before.y)


def _extents(
    motion: str, carried: Optional[str], rng: np.random.Generator
) -> Tuple[float, float, float]:
    length = rng.uniform(0.5, 0.8)
    width = rng.uniform(0.5, 0.8)
    height = rng.uniform(1.6, 1.9)
    if motion == "sitting":
        height = rng.uniform(1.1, 1.3)
    elif motion == "riding":
        length = rng.uniform(1.6, 1.8)
    elif motion == "waving":
        width = rng.uniform(0.8, 1.0)
    if carried == "umbrella":
        height += UMBRELLA_HEIGHT
    return length, width, height


def _track(
    start: np.ndarray,
    heading: float,
    motion: str,
    frames: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """``frames×2`` ground positions starting at ``start``."""
    positions = [start]
    direction = np.array([math.cos(heading), math.sin(heading)])
    for _ in range(frames - 1):
        if motion in TRAVEL:
            step = direction * rng.uniform(*TRAVEL[motion])
        else:
            angle = rng.uniform(0.0, 2 * math.pi)
            step = rng.uniform(0.0, STATIC_JITTER) * np.array(
                [math.cos(angle), math.sin(angle)]
            )
        positions.append(positions[-1] + step)
    return np.stack(positions)


def _in_view(track: np.ndarray) -> bool:
    x, y = track[:, 0], track[:, 1]
    return bool(
        np.all((x >= X_LIMITS[0]) & (x <= X_LIMITS[1]))
        and np.all(np.abs(y) <= Y_LIMIT)
        and np.all(np.hypot(x, y) <= PERCEPTION_RADIUS)
    )


def _separated(track: np.ndarray, others: List[np.ndarray]) -> bool:
    return all(
        np.min(np.linalg.norm(track - other, axis=1)) >= MIN_SEPARATION
        for other in others
    )


def sample_actors(
    frames: int, rng: np.random.Generator, *, attempts: int = 50
) -> List[Actor]:
    """Place 3 to 8 actors that stay in view and apart in every frame.

    Args:
        frames: Number of frames K.
        rng: Scene generator.
        attempts: Placement tries per actor before the layout restarts.

    """
    while True:
        count = int(rng.integers(MIN_ACTORS, MAX_ACTORS + 1))
        tracks: List[np.ndarray] = []
        actors: List[Actor] = []
        for actor_id in range(count):
            color = str(rng.choice(list(COLORS)))
            motion = str(rng.choice(MOTIONS))
            draw = rng.random()
            carried = None if draw < 0.5 else CARRIED[int(draw >= 0.75)]
            length, width, height = _extents(motion, carried, rng)
            for _ in range(attempts):
                heading = float(rng.uniform(-HEADING_LIMIT, HEADING_LIMIT))
                start = np.array([rng.uniform(3.0, 30.0), rng.uniform(-14.0, 14.0)])
                track = _track(start, heading, motion, frames, rng)
                if _in_view(track) and _separated(track, tracks):
                    break
            else:
                break
            tracks.append(track)
            boxes = [
                Box3D(
                    x=float(x),
                    y=float(y),
                    z=GROUND_Z + height / 2,
                    l=length,
                    w=width,
                    h=height,
                    theta=heading,
                ).quantized()
                for x, y in track
            ]
            actors.append(
                Actor(
                    actor_id=actor_id,
                    color=cast(ColorName, color),
                    motion=cast(MotionName, motion),
                    carried=cast(Optional[CarriedName], carried),
                    boxes=boxes,
                )
            )
        if len(actors) == count:
            return actors
        LOGGER.debug("restarting layout of %d actors", count)
