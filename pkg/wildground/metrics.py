"""Grounding accuracy, mean IoU and detection precision/recall."""
from __future__ import annotations

import logging
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Union,
    cast,
)

import numpy as np

from .exceptions import EmptyRecordsError
from .geometry.iou import aabb_iou, rotated_iou_3d
from .models.reports import EvalRecord, EvalSummary

if TYPE_CHECKING:
    from ._logging import WildgroundLogger
    from .geometry.boxes import Box3D

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

THRESHOLDS = (0.25, 0.5)
NMS_THRESHOLD = 0.25

RecordLike = Union[EvalRecord, float]


def _ious(records: Iterable[RecordLike], metric: str) -> np.ndarray:
    values = np.array(
        [r.iou if isinstance(r, EvalRecord) else float(r) for r in records],
        dtype=np.float64,
    )
    if values.size == 0:
        raise EmptyRecordsError(metric)
    return values


def accuracy_at(records: Iterable[RecordLike], threshold: float) -> float:
    """Fraction of records whose IoU reaches ``threshold`` (inclusive).

    Raises:
        EmptyRecordsError: No records.

    """
    ious = _ious(records, "accuracy")
    return float(np.count_nonzero(ious >= threshold)) / ious.size


def mean_iou(records: Iterable[RecordLike]) -> float:
    """Arithmetic mean IoU.

    Raises:
        EmptyRecordsError: No records.

    """
    return float(np.mean(_ious(records, "mean IoU")))


class IouAccumulator:
    """Running accuracy and mean IoU, fed one scene at a time."""

    def __init__(self, thresholds: Sequence[float] = THRESHOLDS) -> None:
        """Instantiate class."""
        self.thresholds = tuple(thresholds)
        self.count = 0
        self.total = 0.0
        self.hits = [0] * len(self.thresholds)

    def add(self, iou: float) -> None:
        """Record one IoU."""
        self.count += 1
        self.total += iou
        for index, threshold in enumerate(self.thresholds):
            if iou >= threshold:
                self.hits[index] += 1

    def mean(self) -> float:
        """Mean IoU so far.

        Raises:
            EmptyRecordsError: Nothing was added.

        """
        if not self.count:
            raise EmptyRecordsError("mean IoU")
        return self.total / self.count

    def accuracy(self, threshold: float) -> float:
        """Accuracy at one of the tracked thresholds."""
        if not self.count:
            raise EmptyRecordsError("accuracy")
        return self.hits[self.thresholds.index(threshold)] / self.count


def greedy_match(
    predictions: Sequence[Box3D], truths: Sequence[Box3D], threshold: float
) -> int:
    """Number of one-to-one pairs formed by taking IoUs in descending order.

    Only pairs with IoU of at least ``threshold`` are matched.

    """
    pairs = [
        (rotated_iou_3d(pred, truth), p, t)
        for p, pred in enumerate(predictions)
        for t, truth in enumerate(truths)
    ]
    pairs.sort(key=lambda item: (-item[0], item[1], item[2]))
    used_pred: Set[int] = set()
    used_truth: Set[int] = set()
    for iou, p, t in pairs:
        if iou < threshold:
            break
        if p in used_pred or t in used_truth:
            continue
        used_pred.add(p)
        used_truth.add(t)
    return len(used_pred)


class DetectionResult(NamedTuple):
    """Precision and recall over a set of scenes."""

    precision: float
    recall: float
    precision_defined: bool
    """False when there were no predictions; precision then reads 0."""


def detection_pr(
    predictions: Sequence[Sequence[Box3D]],
    truths: Sequence[Sequence[Box3D]],
    threshold: float,
) -> DetectionResult:
    """Detection precision and recall at ``threshold``, pooled over scenes."""
    matched = sum(
        greedy_match(pred, truth, threshold) for pred, truth in zip(predictions, truths)
    )
    n_pred = sum(len(pred) for pred in predictions)
    n_truth = sum(len(truth) for truth in truths)
    return DetectionResult(
        matched / n_pred if n_pred else 0.0,
        matched / n_truth if n_truth else 0.0,
        bool(n_pred),
    )


def nms(
    boxes: Sequence[Box3D], scores: Sequence[float], threshold: float = NMS_THRESHOLD
) -> List[int]:
    """Indices kept by greedy suppression in decreasing score order.

    A box is dropped when its IoU with an already kept box exceeds
    ``threshold``. Equal scores keep the lower index first.

    """
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    kept: List[int] = []
    for index in order:
        if all(rotated_iou_3d(boxes[index], boxes[k]) <= threshold for k in kept):
            kept.append(int(index))
    return kept


def make_record(
    scene_id: str, predicted: Box3D, truth: Box3D, query_index: Optional[int] = None
) -> EvalRecord:
    """Score one prediction."""
    return EvalRecord(
        scene_id=scene_id,
        predicted=predicted,
        ground_truth=truth,
        iou=rotated_iou_3d(predicted, truth),
        aabb_iou=aabb_iou(predicted, truth),
        query_index=query_index,
    )


def summarize(
    records: Sequence[EvalRecord],
    detections: Optional[Sequence[Sequence[Box3D]]] = None,
    latency_ms: Optional[float] = None,
) -> EvalSummary:
    """Aggregate per-scene records into an :class:`EvalSummary`.

    Args:
        records: One record per scene.
        detections: Post-suppression query boxes of every scene, in record
            order, for precision/recall.
        latency_ms: Mean inference time per scene.

    Raises:
        EmptyRecordsError: No records.

    """
    fields: Dict[str, Any] = {
        "acc_025": accuracy_at(records, 0.25),
        "acc_05": accuracy_at(records, 0.5),
        "miou": mean_iou(records),
        "n_samples": len(records),
        "aabb_miou": float(np.mean([r.aabb_iou for r in records])),
        "latency_ms": latency_ms,
    }
    if detections is not None:
        truths = [[r.ground_truth] for r in records]
        for threshold, suffix in zip(THRESHOLDS, ("025", "05")):
            result = detection_pr(detections, truths, threshold)
            fields[f"precision_{suffix}"] = result.precision
            fields[f"recall_{suffix}"] = result.recall
            fields["precision_defined"] = result.precision_defined
    LOGGER.debug("summarized %d records", len(records))
    return EvalSummary(**fields)
