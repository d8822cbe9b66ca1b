"""Oriented 3D boxes."""
# pylint: disable=no-self-argument,no-self-use
from __future__ import annotations

import math
from typing import Iterable, Tuple

import numpy as np
from pydantic import Extra, validator

from ..models.base import BaseModel, check_finite

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Map an angle to ``[-pi, pi)``; angles already in range are returned as is."""
    if -math.pi <= theta < math.pi:
        return theta
    wrapped = (theta + math.pi) % TWO_PI - math.pi
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    return wrapped


class Box3D(BaseModel):
    """Box with a yaw rotation about the vertical axis.

    Centers are in sensor coordinates; extents are along the box's own
    heading (``l``), lateral (``w``) and vertical (``h``) axes, in meters.

    """

    x: float
    y: float
    z: float
    l: float  # noqa: E741
    w: float
    h: float
    theta: float = 0.0
    """Yaw in radians, normalized to ``[-pi, pi)``."""

    class Config:
        """Model configuration."""

        extra = Extra.forbid
        frozen = True

    _check_finite = validator("x", "y", "z", "theta", allow_reuse=True)(check_finite)

    @validator("l", "w", "h")
    def _check_extent(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"extent must be positive and finite, got {v}")
        return v

    @validator("theta")
    def _normalize_theta(cls, v: float) -> float:
        return normalize_angle(v)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> Box3D:
        """Build from ``(x, y, z, l, w, h[, theta])``."""
        items = [float(v) for v in values]
        if len(items) == 6:
            items.append(0.0)
        if len(items) != 7:
            raise ValueError(f"expected 6 or 7 box parameters, got {len(items)}")
        x, y, z, l, w, h, theta = items  # noqa: E741
        return cls(x=x, y=y, z=z, l=l, w=w, h=h, theta=theta)

    def to_array(self) -> np.ndarray:
        """``(x, y, z, l, w, h, theta)`` as float64."""
        return np.array(
            [self.x, self.y, self.z, self.l, self.w, self.h, self.theta],
            dtype=np.float64,
        )

    def aabb_params(self) -> np.ndarray:
        """``(x, y, z, l, w, h)``, the parameters the box losses regress."""
        return self.to_array()[:6]

    @property
    def center(self) -> np.ndarray:
        """``(x, y, z)``."""
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @property
    def z_range(self) -> Tuple[float, float]:
        """Bottom and top heights."""
        return self.z - self.h / 2, self.z + self.h / 2

    @property
    def volume(self) -> float:
        """``l * w * h``."""
        return self.l * self.w * self.h

    def translated(self, dx: float, dy: float, dz: float) -> Box3D:
        """Same box moved by an offset."""
        return self.copy(update={"x": self.x + dx, "y": self.y + dy, "z": self.z + dz})

    def rotated_about_origin(self, yaw: float) -> Box3D:
        """Same box after rotating the whole scene about the vertical axis."""
        cos, sin = math.cos(yaw), math.sin(yaw)
        return Box3D(
            x=cos * self.x - sin * self.y,
            y=sin * self.x + cos * self.y,
            z=self.z,
            l=self.l,
            w=self.w,
            h=self.h,
            theta=self.theta + yaw,
        )

    def quantized(self) -> Box3D:
        """Same box with every parameter rounded through float32."""
        return Box3D.from_array(self.to_array().astype(np.float32).astype(np.float64))
