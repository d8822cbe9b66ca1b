"""Oriented 3D box algebra."""
from .boxes import Box3D, normalize_angle
from .iou import (
    aabb_giou,
    aabb_giou_boxes,
    aabb_iou,
    monte_carlo_iou,
    points_in_box,
    rotated_iou_3d,
)
from .polygon import BevPolygon, box_corners_bev, clip_polygon

__all__ = [
    "BevPolygon",
    "Box3D",
    "aabb_giou",
    "aabb_giou_boxes",
    "aabb_iou",
    "box_corners_bev",
    "clip_polygon",
    "monte_carlo_iou",
    "normalize_angle",
    "points_in_box",
    "rotated_iou_3d",
]
