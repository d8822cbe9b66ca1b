"""The individual training loss terms."""
from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor, functional as F
from ..constants import LOGIT_CLIP
from ..exceptions import MissingSpanError
from ..geometry.boxes import Box3D
from ..geometry.iou import aabb_giou
from ..type_defs import Span


def focal_confidence_loss(
    logits: Tensor,
    target_mask: np.ndarray,
    *,
    alpha: float = 0.25,
    gamma: float = 2.0,
) -> Tensor:
    """Binary focal loss on seed confidence logits, mean over seeds.

    Logits are clipped to ``±15`` first. With ``gamma = 0`` this is the
    ``alpha``-weighted binary cross-entropy.

    Args:
        logits: Pre-sigmoid confidences of any shape.
        target_mask: Same shape; true for seeds inside the target box.
        alpha: Weight of positives (negatives get ``1 - alpha``).
        gamma: Focusing exponent.

    """
    mask = np.asarray(target_mask, dtype=bool)
    # margin z is the logit signed towards the true class
    sign = np.where(mask, 1.0, -1.0)
    margin = F.mul(F.clip(logits, -LOGIT_CLIP, LOGIT_CLIP), sign)
    nll = F.softplus(F.neg(margin))
    weights = np.where(mask, alpha, 1.0 - alpha)
    if gamma:
        modulation = F.exp(F.mul(F.softplus(margin), -gamma))
        nll = F.mul(nll, modulation)
    return F.mean(F.mul(nll, weights))


def box_losses(pred: Tensor, gt: Box3D) -> Tuple[Tensor, Tensor]:
    """L1 and GIoU losses of predicted ``(x, y, z, l, w, h)`` parameters.

    Returns:
        ``(L_box, L_giou)``: mean absolute error over the six parameters and
        ``1 - GIoU``.

    """
    target = Tensor(np.broadcast_to(gt.aabb_params(), pred.shape))
    l1 = F.mean(F.abs(F.sub(pred, target)), axis=-1)
    giou = F.sub(1.0, aabb_giou(pred, target))
    return l1, giou


def span_target(length: int, span: Span) -> np.ndarray:
    """Uniform distribution over the words of ``span`` within ``length`` columns."""
    target = np.zeros(length)
    begin, end = span
    target[begin:end] = 1.0 / (end - begin)
    return target


def check_spans(spans: Sequence[Span]) -> None:
    """Require a target span and a terminal span.

    Raises:
        MissingSpanError: No spans, or only the terminal span.

    """
    if not spans:
        raise MissingSpanError("terminal")
    if len(spans) < 2:
        raise MissingSpanError("target")


def soft_token_targets(
    spans: Sequence[Span], queries: int, length: int, matched: int
) -> np.ndarray:
    """``queries×length`` word distributions to learn.

    The matched query puts its mass on the target span, every other query on
    the terminal span.

    """
    check_spans(spans)
    target = np.tile(span_target(length, spans[-1]), (queries, 1))
    target[matched] = span_target(length, spans[0])
    return target


def soft_token_loss(span_logits: Tensor, matched: int, spans: Sequence[Span]) -> Tensor:
    """Cross-entropy of each query's word distribution, mean over queries.

    Args:
        span_logits: ``N×M`` query-to-word scores.
        matched: Query matched to the ground truth.
        spans: Target span first, terminal span last.

    """
    queries, length = span_logits.shape
    target = soft_token_targets(spans, queries, length, matched)
    return F.mean(F.cross_entropy(span_logits, target))


def _span_prototypes(
    word_proj: Tensor, spans: Sequence[Span]
) -> Tuple[Tensor, List[Span]]:
    classes: List[Span] = []
    for begin, end in spans:
        if (begin, end) not in classes:
            classes.append((begin, end))
    rows = [F.mean(F.getitem(word_proj, slice(b, e)), axis=0) for b, e in classes]
    return F.stack(rows), classes


def contrastive_loss(
    query_proj: Tensor,
    word_proj: Tensor,
    matched: int,
    spans: Sequence[Span],
    temperature: float = 0.07,
) -> Tensor:
    """Symmetric InfoNCE between queries and word spans.

    Each span is represented by the mean projection of its words. The
    matched query's positive is the target span; every other query's
    positive is the terminal span; the remaining spans are negatives. The
    reverse direction scores the target span against all queries (positive:
    the matched query) and the terminal span against all queries (positives:
    the unmatched ones). Both directions are averaged.

    Raises:
        MissingSpanError: No target or terminal span.

    """
    check_spans(spans)
    prototypes, classes = _span_prototypes(word_proj, spans)
    queries = query_proj.shape[0]
    logits = F.div(F.matmul(query_proj, F.transpose(prototypes)), temperature)
    target_class = classes.index(tuple(spans[0]))
    terminal_class = classes.index(tuple(spans[-1]))

    forward_target = np.zeros((queries, len(classes)))
    forward_target[:, terminal_class] = 1.0
    forward_target[matched] = 0.0
    forward_target[matched, target_class] = 1.0
    to_spans = F.mean(F.cross_entropy(logits, forward_target))

    reverse = F.transpose(logits)
    reverse_target = np.zeros((len(classes), queries))
    reverse_target[target_class, matched] = 1.0
    rows = [target_class]
    if queries > 1 and terminal_class != target_class:
        reverse_target[terminal_class] = 1.0 / (queries - 1)
        reverse_target[terminal_class, matched] = 0.0
        rows.append(terminal_class)
    picked = F.getitem(reverse, np.array(rows))
    to_queries = F.mean(F.cross_entropy(picked, reverse_target[rows]))
    return F.mul(F.add(to_spans, to_queries), 0.5)
