"""Type definitions."""
from __future__ import annotations

from typing import Tuple

from typing_extensions import Literal, TypedDict

Difficulty = Literal["default", "color-only", "motion-only"]
FusionOrder = Literal["ours", "vision_first", "image_dominant", "concat"]
TemporalMode = Literal["dve", "input_concat", "feature_concat"]
DecoderOrder = Literal["language_first", "vision_first"]
Split = Literal["train", "test"]
GradcheckScope = Literal["core", "geometry", "model", "loss", "all"]
AblationSuite = Literal["components", "frames", "fusion", "temporal", "all"]
Predictor = Literal["model", "oracle", "random"]
ColorName = Literal["red", "green", "blue", "yellow", "white", "black"]
MotionName = Literal["standing", "walking", "riding", "sitting", "waving"]
CarriedName = Literal["umbrella", "bag"]
SpatialName = Literal["near", "far", "left", "right"]

Span = Tuple[int, int]
"""Half-open word index range ``[begin, end)``."""


class LossRowTypedDict(TypedDict):
    """One line of the training loss log."""

    step: int
    L_s: float
    L_giou: float
    L_box: float
    L_c: float
    L_st: float
    total: float

