"""Box overlap measures.

Evaluation uses :func:`rotated_iou_3d` (exact for yawed boxes). The training
loss uses :func:`aabb_giou`, which ignores yaw and is differentiable.

"""
from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from ..autodiff import functional as F
from ..autodiff.tensor import Tensor
from .boxes import Box3D
from .polygon import EPSILON, box_corners_bev, clip_polygon


def _ordered(a: Box3D, b: Box3D) -> Tuple[Box3D, Box3D]:
    return (a, b) if tuple(a.to_array()) <= tuple(b.to_array()) else (b, a)


def rotated_iou_3d(a: Box3D, b: Box3D) -> float:
    """Exact IoU of two yawed boxes.

    The footprint intersection comes from convex clipping in the ground plane
    and is multiplied by the vertical overlap. Arguments are put in a canonical
    order first, so swapping them gives a bit-identical result.

    """
    first, second = _ordered(a, b)
    bottom = max(first.z_range[0], second.z_range[0])
    top = min(first.z_range[1], second.z_range[1])
    if top <= bottom:
        return 0.0
    reach = math.hypot(first.l, first.w) / 2 + math.hypot(second.l, second.w) / 2
    if math.hypot(first.x - second.x, first.y - second.y) > reach:
        return 0.0
    poly_first = box_corners_bev(first)
    poly_second = box_corners_bev(second)
    overlap_area = clip_polygon(poly_first, poly_second).area
    if overlap_area <= 0.0:
        return 0.0
    intersection = overlap_area * (top - bottom)
    volume_first = poly_first.area * (first.z_range[1] - first.z_range[0])
    volume_second = poly_second.area * (second.z_range[1] - second.z_range[0])
    union = volume_first + volume_second - intersection
    if union <= 0.0:
        return 0.0
    return min(max(intersection / union, 0.0), 1.0)


def _corners(params: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    center = params[..., 0:3]
    size = params[..., 3:6]
    half = F.mul(size, 0.5)
    return F.sub(center, half), F.add(center, half), size


def _volume(extent: Tensor) -> Tensor:
    return F.mul(F.mul(extent[..., 0], extent[..., 1]), extent[..., 2])


def aabb_giou(a: Tensor, b: Tensor) -> Tensor:
    """Generalized IoU of axis-aligned boxes given as ``(..., 6)`` parameters.

    Parameters are ``(x, y, z, l, w, h)``; yaw is ignored. The result has the
    leading shape of the inputs and lies in ``(-1, 1]``.

    """
    low_a, high_a, size_a = _corners(a)
    low_b, high_b, size_b = _corners(b)
    overlap = F.relu(F.sub(F.minimum(high_a, high_b), F.maximum(low_a, low_b)))
    intersection = _volume(overlap)
    union = F.sub(F.add(_volume(size_a), _volume(size_b)), intersection)
    enclosing = _volume(F.sub(F.maximum(high_a, high_b), F.minimum(low_a, low_b)))
    iou = F.div(intersection, union)
    return F.sub(iou, F.div(F.sub(enclosing, union), enclosing))


def aabb_giou_boxes(a: Box3D, b: Box3D) -> float:
    """:func:`aabb_giou` for two boxes as a plain number."""
    return aabb_giou(Tensor(a.aabb_params()), Tensor(b.aabb_params())).item()


def aabb_iou(a: Box3D, b: Box3D) -> float:
    """IoU of the axis-aligned versions of two boxes (yaw ignored)."""
    half_a, half_b = a.aabb_params()[3:] / 2, b.aabb_params()[3:] / 2
    overlap = np.clip(
        np.minimum(a.center + half_a, b.center + half_b)
        - np.maximum(a.center - half_a, b.center - half_b),
        0,
        None,
    )
    intersection = float(np.prod(overlap))
    union = a.volume + b.volume - intersection
    return intersection / union if union > 0 else 0.0


def points_in_box(points: np.ndarray, box: Box3D) -> np.ndarray:
    """Mask of the points inside ``box``, boundary included.

    Args:
        points: ``N×3`` (extra columns are ignored).
        box: The box.

    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return np.zeros(len(points), dtype=bool)
    offset = points[:, :3] - box.center
    cos, sin = math.cos(box.theta), math.sin(box.theta)
    along = cos * offset[:, 0] + sin * offset[:, 1]
    across = -sin * offset[:, 0] + cos * offset[:, 1]
    return (
        (np.abs(along) <= box.l / 2 + EPSILON)
        & (np.abs(across) <= box.w / 2 + EPSILON)
        & (np.abs(offset[:, 2]) <= box.h / 2 + EPSILON)
    )


def _bounding_volume(a: Box3D, b: Box3D) -> Tuple[np.ndarray, np.ndarray]:
    corners = np.vstack([box_corners_bev(a).as_array(), box_corners_bev(b).as_array()])
    low = np.array([*corners.min(axis=0), min(a.z_range[0], b.z_range[0])])
    high = np.array([*corners.max(axis=0), max(a.z_range[1], b.z_range[1])])
    return low, high


def monte_carlo_iou(
    a: Box3D,
    b: Box3D,
    *,
    samples: int = 1_000_000,
    rng: Optional[np.random.Generator] = None,
    chunk: int = 250_000,
) -> float:
    """Estimate rotated IoU by uniform sampling over both boxes' bounding volume."""
    rng = rng or np.random.default_rng(0)
    low, high = _bounding_volume(a, b)
    inside_both = inside_either = 0
    remaining = samples
    while remaining > 0:
        count = min(chunk, remaining)
        points = rng.uniform(low, high, size=(count, 3))
        in_a = points_in_box(points, a)
        in_b = points_in_box(points, b)
        inside_both += int(np.count_nonzero(in_a & in_b))
        inside_either += int(np.count_nonzero(in_a | in_b))
        remaining -= count
    return inside_both / inside_either if inside_either else 0.0
