"""Convex polygons in the ground plane."""
from __future__ import annotations

import math
from typing import TYPE_CHECKING, List, Sequence, Tuple

import numpy as np

if TYPE_CHECKING:
    from .boxes import Box3D

EPSILON = 1e-9
"""Tolerance for classifying a vertex as on a clipping edge."""

Point = Tuple[float, float]


class BevPolygon:
    """Counter-clockwise vertex loop in the bird's-eye-view plane."""

    def __init__(self, vertices: Sequence[Sequence[float]]) -> None:
        """Instantiate class.

        Args:
            vertices: ``(x, y)`` pairs in counter-clockwise order.

        """
        self.vertices: List[Point] = [(float(v[0]), float(v[1])) for v in vertices]

    def __len__(self) -> int:
        """Number of vertices."""
        return len(self.vertices)

    def __repr__(self) -> str:
        """Return object representation."""
        return f"BevPolygon({self.vertices!r})"

    def as_array(self) -> np.ndarray:
        """Vertices as an ``n×2`` array."""
        return np.array(self.vertices, dtype=np.float64).reshape(-1, 2)

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise loops."""
        total = 0.0
        count = len(self.vertices)
        for index in range(count):
            x1, y1 = self.vertices[index]
            x2, y2 = self.vertices[(index + 1) % count]
            total += x1 * y2 - x2 * y1
        return total / 2.0

    @property
    def area(self) -> float:
        """Enclosed area (zero for degenerate loops)."""
        if len(self.vertices) < 3:
            return 0.0
        return max(self.signed_area, 0.0)

    def is_convex(self) -> bool:
        """Whether every turn is to the left (collinear turns allowed)."""
        count = len(self.vertices)
        if count < 3:
            return False
        for index in range(count):
            ax, ay = self.vertices[index]
            bx, by = self.vertices[(index + 1) % count]
            cx, cy = self.vertices[(index + 2) % count]
            if (bx - ax) * (cy - by) - (by - ay) * (cx - bx) < -EPSILON:
                return False
        return True


def box_corners_bev(box: Box3D) -> BevPolygon:
    """Four counter-clockwise corners of the rotated ``l×w`` footprint of ``box``."""
    half_l, half_w = box.l / 2.0, box.w / 2.0
    cos, sin = math.cos(box.theta), math.sin(box.theta)
    local = ((half_l, half_w), (-half_l, half_w), (-half_l, -half_w), (half_l, -half_w))
    return BevPolygon(
        [(box.x + cos * u - sin * v, box.y + sin * u + cos * v) for u, v in local]
    )


def _side(edge_start: Point, edge_end: Point, point: Point) -> float:
    return (edge_end[0] - edge_start[0]) * (point[1] - edge_start[1]) - (
        edge_end[1] - edge_start[1]
    ) * (point[0] - edge_start[0])


def _crossing(start: Point, end: Point, edge_start: Point, edge_end: Point) -> Point:
    side_start = _side(edge_start, edge_end, start)
    side_end = _side(edge_start, edge_end, end)
    ratio = side_start / (side_start - side_end)
    return (
        start[0] + ratio * (end[0] - start[0]),
        start[1] + ratio * (end[1] - start[1]),
    )


def clip_polygon(subject: BevPolygon, clipper: BevPolygon) -> BevPolygon:
    """Intersection of ``subject`` with the convex ``clipper`` (Sutherland-Hodgman).

    Vertices within :data:`EPSILON` of a clipping edge count as inside. An
    empty or degenerate intersection yields a polygon with zero area.

    """
    output = list(subject.vertices)
    count = len(clipper.vertices)
    for index in range(count):
        edge_start = clipper.vertices[index - 1]
        edge_end = clipper.vertices[index]
        candidates, output = output, []
        if not candidates:
            break
        previous = candidates[-1]
        previous_inside = _side(edge_start, edge_end, previous) >= -EPSILON
        for current in candidates:
            current_inside = _side(edge_start, edge_end, current) >= -EPSILON
            if current_inside:
                if not previous_inside:
                    output.append(_crossing(previous, current, edge_start, edge_end))
                output.append(current)
            elif previous_inside:
                output.append(_crossing(previous, current, edge_start, edge_end))
            previous, previous_inside = current, current_inside
    return BevPolygon(output)
