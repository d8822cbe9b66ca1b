"""Base data model."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, Optional

import pydantic
from pydantic import Extra


class BaseModel(pydantic.BaseModel):
    """Base class for data models.

    Unknown keys are rejected and assignments are validated.

    """

    class Config:
        """Model configuration."""

        extra = Extra.forbid
        validate_assignment = True

    def get(self, name: str, default: Any = None) -> Any:
        """Safely get the value of an attribute.

        Args:
            name: Attribute name to return the value for.
            default: Value to return if attribute is not found.

        """
        return getattr(self, name, default)


def resolve_path_field(
    value: Optional[Path], values: Dict[str, Any]
) -> Optional[Path]:
    """Resolve a path field against the ``base_dir`` field when relative."""
    if value is None or value.is_absolute():
        return value
    base_dir = values.get("base_dir")
    return ((base_dir or Path.cwd()) / value).resolve()


def check_finite(value: Optional[float]) -> Optional[float]:
    """Reject NaN and infinite numbers."""
    if value is None:
        return value
    if not math.isfinite(value):
        raise ValueError(f"{value} is not finite")
    return value


def check_non_negative(value: Optional[float]) -> Optional[float]:
    """Reject negative numbers."""
    if value is None:
        return value
    if value < 0:
        raise ValueError(f"{value} is negative")
    return value


def check_unit_interval(value: Optional[float]) -> Optional[float]:
    """Reject numbers outside ``[0, 1]``."""
    if value is None:
        return value
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{value} is outside [0, 1]")
    return value
