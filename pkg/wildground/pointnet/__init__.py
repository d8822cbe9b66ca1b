"""Point cloud sampling and encoding."""
from .cloud import PointCloud, bev_pixel
from .encoder import (
    Grouping,
    PointEncoder,
    SeedSet,
    SetAbstraction,
    StageGroups,
    build_grouping,
)
from .sampling import ball_query, farthest_point_sample

__all__ = [
    "Grouping",
    "PointCloud",
    "PointEncoder",
    "SeedSet",
    "SetAbstraction",
    "StageGroups",
    "ball_query",
    "bev_pixel",
    "build_grouping",
    "farthest_point_sample",
]
