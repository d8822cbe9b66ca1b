"""Single-target query matching."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..autodiff import Tensor
from ..geometry.boxes import Box3D
from ..geometry.iou import aabb_giou
from ..type_defs import Span
from .terms import span_target


class MatchResult(NamedTuple):
    """The query assigned to the ground-truth target and the cost behind it."""

    index: int
    cost: np.ndarray
    """Total matching cost of every query."""

    l1: np.ndarray
    giou: np.ndarray
    """``1 - GIoU`` of every query."""

    span: np.ndarray
    """Cross-entropy of every query's word distribution against the target span."""


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def match(
    boxes: np.ndarray,
    span_logits: np.ndarray,
    gt: Box3D,
    gt_span: Span,
    *,
    box_weight: float = 5.0,
    giou_weight: float = 1.0,
    span_weight: float = 2.0,
) -> MatchResult:
    """Pick the query minimizing the weighted box and span cost.

    With a single ground truth the optimal assignment is the cheapest query;
    ties go to the lower index.

    Args:
        boxes: ``N×6`` predicted ``(x, y, z, l, w, h)``.
        span_logits: ``N×M`` query-to-word scores.
        gt: Ground-truth box.
        gt_span: Target words.
        box_weight: Weight of the mean absolute box error.
        giou_weight: Weight of ``1 - GIoU``.
        span_weight: Weight of the span cross-entropy.

    """
    target = gt.aabb_params()
    l1 = np.abs(boxes - target).mean(axis=-1)
    giou = 1.0 - aabb_giou(
        Tensor(boxes, dtype=np.float64),
        Tensor(np.broadcast_to(target, boxes.shape), dtype=np.float64),
    ).numpy()
    span = -(
        _log_softmax(np.asarray(span_logits, dtype=np.float64))
        * span_target(span_logits.shape[-1], gt_span)
    ).sum(axis=-1)
    cost = box_weight * l1 + giou_weight * giou + span_weight * span
    return MatchResult(int(np.argmin(cost)), cost, l1, giou, span)
