"""Weighted training objective over a batch."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, List, NamedTuple, Sequence, cast

from ..autodiff import Tensor, functional as F
from ..geometry.iou import points_in_box
from ..models.reports import LossBreakdown
from .matcher import MatchResult, match
from .terms import (
    box_losses,
    check_spans,
    contrastive_loss,
    focal_confidence_loss,
    soft_token_loss,
)

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..geometry.boxes import Box3D
    from ..model.heads import Predictions
    from ..models.config import LossWeights

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


def total_loss(parts: LossBreakdown, weights: LossWeights) -> float:
    """Weighted sum ``alpha L_s + beta L_giou + gamma L_box + lambda L_c + mu L_st``."""
    return (
        weights.alpha * parts.confidence
        + weights.beta * parts.giou
        + weights.gamma * parts.box
        + weights.lambda_ * parts.contrastive
        + weights.mu * parts.soft_token
    )


def weighted_total(parts: Sequence[Tensor], weights: LossWeights) -> Tensor:
    """Differentiable :func:`total_loss` of ``(L_s, L_giou, L_box, L_c, L_st)``."""
    factors = (weights.alpha, weights.beta, weights.gamma, weights.lambda_, weights.mu)
    return F.total([F.mul(part, factor) for part, factor in zip(parts, factors)])


class BatchLoss(NamedTuple):
    """Objective of one batch."""

    total: Tensor
    """Scalar to differentiate."""

    breakdown: LossBreakdown
    """Batch means of the five terms and their weighted total."""

    matches: List[MatchResult]


def compute_losses(
    preds: Predictions,
    targets: Sequence[Box3D],
    weights: LossWeights,
    temperature: float = 0.07,
) -> BatchLoss:
    """Match every scene's target and average the five terms over the batch.

    Args:
        preds: Model output.
        targets: Ground-truth box of every scene.
        weights: Term weights, focal and matcher constants.
        temperature: Contrastive softmax temperature.

    Raises:
        MissingSpanError: An utterance has no target span.

    """
    boxes = preds.boxes()
    terms: List[List[Tensor]] = [[], [], [], [], []]
    matches: List[MatchResult] = []
    for row, gt in enumerate(targets):
        spans = preds.spans[row]
        check_spans(spans)
        length = int(preds.text_mask[row].sum())
        words = (row, slice(None), slice(0, length))
        inside = points_in_box(preds.candidates.seed_positions[row], gt)
        confidence = focal_confidence_loss(
            F.getitem(preds.candidates.logits, row),
            inside,
            alpha=weights.focal_alpha,
            gamma=weights.focal_gamma,
        )
        result = match(
            boxes.data[row],
            preds.span_logits.data[words],
            gt,
            spans[0],
            box_weight=weights.gamma,
            giou_weight=weights.beta,
            span_weight=weights.match_span,
        )
        matches.append(result)
        l1, giou = box_losses(F.getitem(boxes, (row, result.index)), gt)
        contrastive = contrastive_loss(
            F.getitem(preds.query_proj, row),
            F.getitem(preds.word_proj, (row, slice(0, length))),
            result.index,
            spans,
            temperature,
        )
        soft_token = soft_token_loss(
            F.getitem(preds.span_logits, words), result.index, spans
        )
        values = (confidence, giou, l1, contrastive, soft_token)
        for bucket, value in zip(terms, values):
            bucket.append(value)
    scale = 1.0 / len(targets)
    parts = [F.mul(F.total(bucket), scale) for bucket in terms]
    # rounding can leave 1 - GIoU a hair below zero
    means = [max(float(part.item()), 0.0) for part in parts]
    breakdown = LossBreakdown(
        confidence=means[0],
        giou=means[1],
        box=means[2],
        contrastive=means[3],
        soft_token=means[4],
    )
    breakdown = breakdown.copy(update={"total": total_loss(breakdown, weights)})
    total = weighted_total(parts, weights)
    LOGGER.debug("loss parts %s", breakdown.dict(by_alias=True))
    return BatchLoss(total, breakdown, matches)
