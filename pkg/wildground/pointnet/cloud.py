"""Point cloud container."""
from __future__ import annotations

from typing import List, Optional

import numpy as np

from ..constants import BEV_X_RANGE, BEV_Y_RANGE
from ..exceptions import EmptyPointCloudError


def bev_pixel(xy: np.ndarray, size: int) -> np.ndarray:
    """Image ``(row, col)`` of ground-plane positions in the rendered view.

    Row 0 is the far edge of the view; column 0 is the left edge (+y).

    """
    x_low, x_high = BEV_X_RANGE
    y_low, y_high = BEV_Y_RANGE
    rows = (x_high - xy[:, 0]) / (x_high - x_low) * size
    cols = (y_high - xy[:, 1]) / (y_high - y_low) * size
    return np.stack([rows, cols], axis=1)


class PointCloud:
    """One frame of LiDAR points.

    Attributes:
        xyz: ``N×3`` positions in meters.
        intensity: ``N`` reflectance values.
        frame_time: Frame index within the scene.
        colors: ``N×3`` image colors in ``[0, 1]`` once painted.

    """

    def __init__(
        self,
        xyz: np.ndarray,
        intensity: np.ndarray,
        frame_time: int = 0,
        colors: Optional[np.ndarray] = None,
    ) -> None:
        """Instantiate class.

        Raises:
            EmptyPointCloudError: No points were given.
            ValueError: Shapes disagree or coordinates are not finite.

        """
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        if len(xyz) == 0:
            raise EmptyPointCloudError()
        intensity = np.asarray(intensity, dtype=np.float64).reshape(-1)
        if len(intensity) != len(xyz):
            raise ValueError(
                f"{len(intensity)} intensities given for {len(xyz)} points"
            )
        if not np.isfinite(xyz).all():
            raise ValueError("point coordinates must be finite")
        self.xyz = xyz
        self.intensity = intensity
        self.frame_time = frame_time
        self.colors = None if colors is None else np.asarray(colors, dtype=np.float64)

    def __len__(self) -> int:
        """Number of points."""
        return len(self.xyz)

    @property
    def feature_dim(self) -> int:
        """Width of :meth:`features`."""
        return 1 if self.colors is None else 4

    def features(self) -> np.ndarray:
        """Per-point input features: intensity, then color when painted."""
        if self.colors is None:
            return self.intensity[:, None]
        return np.concatenate([self.intensity[:, None], self.colors], axis=1)

    def permuted(self, order: np.ndarray) -> PointCloud:
        """Same cloud with points reordered."""
        return PointCloud(
            self.xyz[order],
            self.intensity[order],
            self.frame_time,
            None if self.colors is None else self.colors[order],
        )

    def painted(self, image: np.ndarray) -> PointCloud:
        """Attach the color of the image pixel each point projects to.

        Args:
            image: ``H×W×3`` uint8 top-down render of the same frame.

        """
        size = image.shape[0]
        pixels = np.floor(bev_pixel(self.xyz[:, :2], size)).astype(np.int64)
        pixels = np.clip(pixels, 0, size - 1)
        colors = image[pixels[:, 0], pixels[:, 1]].astype(np.float64) / 255.0
        return PointCloud(self.xyz, self.intensity, self.frame_time, colors)

    @staticmethod
    def splice(clouds: List[PointCloud]) -> PointCloud:
        """Concatenate frames into one cloud, keeping the first frame's time.

        Colors survive only when every frame is painted.

        """
        colors = [cloud.colors for cloud in clouds]
        return PointCloud(
            np.concatenate([cloud.xyz for cloud in clouds]),
            np.concatenate([cloud.intensity for cloud in clouds]),
            clouds[0].frame_time,
            None
            if any(c is None for c in colors)
            else np.concatenate([c for c in colors if c is not None]),
        )
