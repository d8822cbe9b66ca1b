"""Test wildground.geometry.boxes."""
# pylint: disable=no-self-use
from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from wildground.geometry.boxes import Box3D, normalize_angle

from ...factories import make_box

MODULE = "wildground.geometry.boxes"


@pytest.mark.parametrize(
    "theta, expected",
    [
        (0.0, 0.0),
        (-math.pi, -math.pi),
        (math.pi, -math.pi),
        (3 * math.pi / 2, -math.pi / 2),
        (-3 * math.pi / 2, math.pi / 2),
        (4 * math.pi + 0.25, 0.25),
    ],
)
def test_normalize_angle(theta: float, expected: float) -> None:
    """Test normalize_angle."""
    assert normalize_angle(theta) == pytest.approx(expected)
    assert -math.pi <= normalize_angle(theta) < math.pi


class TestBox3D:
    """Test Box3D."""

    @pytest.mark.parametrize("field", ["l", "w", "h"])
    @pytest.mark.parametrize("value", [0.0, -1.0, math.inf, math.nan])
    def test_extent(self, field: str, value: float) -> None:
        """Test extents must be positive and finite."""
        with pytest.raises(ValidationError, match="extent must be positive"):
            make_box(**{field: value})

    @pytest.mark.parametrize("field", ["x", "theta"])
    def test_finite(self, field: str) -> None:
        """Test positions must be finite."""
        with pytest.raises(ValidationError):
            make_box(**{field: math.nan})

    def test_extra_field(self) -> None:
        """Test unknown fields are rejected."""
        with pytest.raises(ValidationError):
            Box3D.parse_obj({**make_box().dict(), "yaw": 1.0})

    def test_frozen(self) -> None:
        """Test boxes are immutable."""
        box = make_box()
        with pytest.raises(TypeError):
            box.x = 2.0  # type: ignore

    def test_theta_normalized(self) -> None:
        """Test theta is normalized on construction."""
        assert make_box(theta=3 * math.pi).theta == pytest.approx(-math.pi)

    def test_from_array(self) -> None:
        """Test from_array with and without yaw."""
        assert Box3D.from_array([1, 2, 3, 4, 5, 6]).theta == 0.0
        box = Box3D.from_array(np.array([1, 2, 3, 4, 5, 6, 0.5]))
        np.testing.assert_array_equal(box.to_array(), [1, 2, 3, 4, 5, 6, 0.5])
        np.testing.assert_array_equal(box.aabb_params(), [1, 2, 3, 4, 5, 6])

    def test_from_array_length(self) -> None:
        """Test from_array with the wrong number of values."""
        with pytest.raises(ValueError, match="expected 6 or 7"):
            Box3D.from_array([1.0, 2.0])

    def test_properties(self) -> None:
        """Test center, z_range and volume."""
        box = make_box(x=1.0, z=2.0, l=2.0, w=3.0, h=4.0)
        np.testing.assert_array_equal(box.center, [1.0, 0.0, 2.0])
        assert box.z_range == (0.0, 4.0)
        assert box.volume == 24.0

    def test_quantized(self) -> None:
        """Test quantized rounds through float32."""
        box = make_box(x=0.1).quantized()
        assert box.x == float(np.float32(0.1))

    def test_rotated_about_origin(self) -> None:
        """Test rotating a box about the vertical axis."""
        box = make_box(x=2.0, theta=0.5).rotated_about_origin(math.pi / 2)
        assert box.x == pytest.approx(0.0, abs=1e-12)
        assert box.y == pytest.approx(2.0)
        assert box.theta == pytest.approx(0.5 + math.pi / 2)

    def test_translated(self) -> None:
        """Test translated."""
        box = make_box().translated(1.0, -2.0, 0.5)
        np.testing.assert_array_equal(box.center, [1.0, -2.0, 0.5])
