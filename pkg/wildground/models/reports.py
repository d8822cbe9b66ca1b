"""Result data models."""
# pylint: disable=no-self-argument,no-self-use
from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import Extra, Field, root_validator, validator
from typing_extensions import Literal

from ..geometry.boxes import Box3D
from .base import BaseModel, check_finite, check_non_negative, check_unit_interval


class LossBreakdown(BaseModel):
    """The five loss terms of one step and their weighted total.

    Dumped with ``by_alias=True`` the keys match the training log columns.

    """

    confidence: float = Field(..., alias="L_s")
    """Focal loss on seed confidences (alias ``L_s``)."""

    giou: float = Field(..., alias="L_giou")
    """``1 - GIoU`` of the matched box (alias ``L_giou``)."""

    box: float = Field(..., alias="L_box")
    """Mean absolute error of the matched box parameters (alias ``L_box``)."""

    contrastive: float = Field(..., alias="L_c")
    """Vision-language contrastive loss (alias ``L_c``)."""

    soft_token: float = Field(..., alias="L_st")
    """Soft-token span prediction loss (alias ``L_st``)."""

    total: float = 0.0
    """Weighted sum."""

    class Config:
        """Model configuration."""

        allow_population_by_field_name = True
        extra = Extra.forbid

    _check_parts = validator(
        "confidence", "giou", "box", "contrastive", "soft_token", allow_reuse=True
    )(check_non_negative)
    _check_finite = validator(
        "confidence",
        "giou",
        "box",
        "contrastive",
        "soft_token",
        "total",
        allow_reuse=True,
    )(check_finite)

    def parts(self) -> List[float]:
        """Terms in objective order ``(L_s, L_giou, L_box, L_c, L_st)``."""
        return [self.confidence, self.giou, self.box, self.contrastive, self.soft_token]


class EvalRecord(BaseModel):
    """Outcome of grounding one scene."""

    scene_id: str
    predicted: Box3D
    ground_truth: Box3D

    iou: float
    """Rotated 3D IoU between prediction and ground truth."""

    aabb_iou: float = 0.0
    """IoU with yaw ignored, for diagnosis."""

    query_index: Optional[int] = None
    """Decoder query the prediction came from (model predictor only)."""

    _check_iou = validator("iou", "aabb_iou", allow_reuse=True)(check_unit_interval)

    def success(self, threshold: float) -> bool:
        """Whether the IoU reaches ``threshold`` (inclusive)."""
        return self.iou >= threshold


class EvalSummary(BaseModel):
    """Aggregate metrics of an evaluation run."""

    acc_025: float
    """Fraction of scenes with IoU >= 0.25."""

    acc_05: float
    """Fraction of scenes with IoU >= 0.5."""

    miou: float
    n_samples: int

    aabb_miou: Optional[float] = None
    precision_025: Optional[float] = None
    recall_025: Optional[float] = None
    precision_05: Optional[float] = None
    recall_05: Optional[float] = None

    precision_defined: bool = True
    """False when no detections were made, in which case precision reads 0."""

    latency_ms: Optional[float] = None
    """Mean wall-clock inference time per scene."""

    _check_fractions = validator(
        "acc_025",
        "acc_05",
        "miou",
        "aabb_miou",
        "precision_025",
        "recall_025",
        "precision_05",
        "recall_05",
        allow_reuse=True,
    )(check_unit_interval)

    @root_validator(skip_on_failure=True)
    def _check_order(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["acc_05"] > values["acc_025"]:
            raise ValueError("acc_05 cannot exceed acc_025")
        return values

    def rows(self) -> List[Dict[str, Any]]:
        """``metric,value`` rows for the summary file (unset metrics omitted)."""
        return [
            {"metric": name, "value": value}
            for name, value in self.dict(exclude_none=True).items()
        ]


class RunReport(BaseModel):
    """Everything needed to recompute and reproduce a training run."""

    build_id: str
    """``git describe`` output of the source tree, or the package version."""

    seed: int
    dataset: str
    config: Dict[str, Any]
    """Echo of the run configuration."""

    loss_curve: List[float] = []
    """Mean total loss of every epoch."""

    steps: int = 0
    wall_clock_s: float = 0.0
    best_epoch: Optional[int] = None
    summary: Optional[EvalSummary] = None
    """Held-out evaluation of the best checkpoint, when one was run."""

    aborted: bool = False
    """Training stopped on a non-finite loss."""


class AblationRow(BaseModel):
    """One variant trained and evaluated with one seed."""

    suite: str
    variant: str
    seed: int
    difficulty: str
    status: Literal["ok", "failed"] = "ok"
    acc_025: Optional[float] = None
    acc_05: Optional[float] = None
    miou: Optional[float] = None
    error: Optional[str] = None


class GradientCheckResult(BaseModel):
    """Finite-difference check of one differentiable operation."""

    name: str
    scope: str
    instances: int
    """Random instances checked."""

    max_error: float
    """Largest normwise relative error over every instance."""

    tolerance: float

    @property
    def passed(self) -> bool:
        """Whether every instance stayed within :attr:`tolerance`."""
        return self.max_error <= self.tolerance
