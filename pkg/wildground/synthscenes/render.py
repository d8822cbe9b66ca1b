"""Schematic top-down camera images."""
from __future__ import annotations

from typing import TYPE_CHECKING, List

import numpy as np

from ..constants import IMAGE_SIZE
from ..pointnet.cloud import bev_pixel
from .actors import COLORS

if TYPE_CHECKING:
    from .actors import Actor

BACKGROUND = 70
CLUTTER_GREY = 128
DISC_RADIUS = 2.0
"""Pixels."""


def render_frame(
    actors: List[Actor], clutter_xyz: np.ndarray, frame: int, size: int = IMAGE_SIZE
) -> np.ndarray:
    """``size×size×3`` uint8 view of one frame.

    Clutter shows as grey dots and every actor as a disc in its color. Color
    exists only here; point intensities never carry it.

    """
    image = np.full((size, size, 3), BACKGROUND, dtype=np.uint8)
    dots = np.floor(bev_pixel(clutter_xyz[:, :2], size)).astype(np.int64)
    inside = np.all((dots >= 0) & (dots < size), axis=1)
    image[dots[inside, 0], dots[inside, 1]] = CLUTTER_GREY
    rows, cols = np.mgrid[0:size, 0:size]
    centers = bev_pixel(
        np.array([[actor.boxes[frame].x, actor.boxes[frame].y] for actor in actors]),
        size,
    )
    for actor, (row, col) in zip(actors, centers):
        disc = (rows + 0.5 - row) ** 2 + (cols + 0.5 - col) ** 2 <= DISC_RADIUS**2
        image[disc] = COLORS[actor.color]
    return image
