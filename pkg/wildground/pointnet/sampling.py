"""Farthest point sampling and ball query."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, cast

import numpy as np

from ..exceptions import EmptyPointCloudError

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


def farthest_point_sample(xyz: np.ndarray, count: int) -> np.ndarray:
    """Indices of ``count`` points spread by iterated farthest-point selection.

    Selection starts at index 0. Each later pick maximizes the distance to
    everything picked so far; ties go to the lowest index. Asking for more
    points than exist repeats the selection order.

    Args:
        xyz: ``N×3`` positions.
        count: Number of indices to return.

    Raises:
        EmptyPointCloudError: ``xyz`` has no rows.

    """
    total = len(xyz)
    if total == 0:
        raise EmptyPointCloudError()
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    picks = min(count, total)
    chosen = np.zeros(picks, dtype=np.int64)
    distance = np.full(total, np.inf)
    farthest = 0
    for i in range(picks):
        chosen[i] = farthest
        sq = np.sum((xyz - xyz[farthest]) ** 2, axis=1)
        distance = np.minimum(distance, sq)
        # picked points never win again, even among duplicates
        distance[chosen[: i + 1]] = -1.0
        farthest = int(np.argmax(distance))
    if count > total:
        LOGGER.debug("sampling %d centers from %d points; repeating", count, total)
        chosen = chosen[np.arange(count) % total]
    return chosen


def ball_query(
    xyz: np.ndarray, centers: np.ndarray, radius: float, max_neighbors: int
) -> np.ndarray:
    """Group up to ``max_neighbors`` points within ``radius`` of each center.

    Neighbors are taken in index order. Short groups are padded with their
    first member; a center with no point in range is grouped with its
    nearest point.

    Args:
        xyz: ``N×3`` positions.
        centers: ``S×3`` group centers.
        radius: Inclusive search radius.
        max_neighbors: Group size ``k``.

    Returns:
        ``S×k`` indices into ``xyz``.

    """
    sq = np.sum((centers[:, None, :] - xyz[None, :, :]) ** 2, axis=-1)
    inside = sq <= radius * radius
    order = np.argsort(~inside, axis=1, kind="stable")[:, :max_neighbors]
    found = inside.sum(axis=1)
    if order.shape[1] < max_neighbors:
        pad = np.repeat(order[:, :1], max_neighbors - order.shape[1], axis=1)
        order = np.concatenate([order, pad], axis=1)
    slots = np.arange(max_neighbors)[None, :]
    group = np.where(slots < found[:, None], order, order[:, :1])
    empty = found == 0
    if empty.any():
        group[empty] = np.argmin(sq[empty], axis=1)[:, None]
    return group
