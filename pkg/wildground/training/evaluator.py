"""Grounding evaluation with the network, the symbolic oracle or random boxes."""
from __future__ import annotations

import contextvars
import logging
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    cast,
)

import numpy as np
from typing_extensions import Protocol

from ..autodiff import load_checkpoint, precision
from ..constants import ANNOTATION_SUFFIX
from ..exceptions import ConfigurationError
from ..geometry.boxes import Box3D
from ..metrics import NMS_THRESHOLD, make_record, nms, summarize
from ..model.heads import select_target
from ..model.network import GroundingModel
from ..synthscenes.actors import GROUND_Z, X_LIMITS, Y_LIMIT
from ..synthscenes.language import ground_words
from ..synthscenes.seeds import child_seed
from .artifacts import write_records, write_summary

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..encoders.vocabulary import Vocabulary
    from ..models.config import ModelConfig
    from ..models.reports import EvalRecord, EvalSummary
    from ..synthscenes.loader import Batch, SceneDataset
    from ..type_defs import Predictor

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

SUMMARY_NAME = "summary.csv"
RECORDS_NAME = "records.csv"
RANDOM_EXTENTS = ((0.4, 1.8), (0.4, 1.0), (1.1, 2.1))
"""Ranges of ``l``, ``w`` and ``h`` drawn by the random predictor."""


class Prediction(NamedTuple):
    """Grounding output for one scene."""

    box: Box3D
    query_index: Optional[int] = None
    detections: Sequence[Box3D] = ()
    """Candidate boxes left after suppression."""


class GroundingPredictor(Protocol):
    """Anything that grounds the utterances of a batch."""

    name: str

    def predict(self, batch: Batch) -> List[Prediction]:
        """One prediction per scene of ``batch``."""


class ModelPredictor:
    """The network: the query furthest from ``not-mentioned`` wins."""

    name = "model"

    def __init__(self, model: GroundingModel, dtype: str = "float32") -> None:
        """Instantiate class.

        Args:
            model: Trained network; it is switched to eval mode.
            dtype: Tensor precision of the forward pass.

        """
        self.model = model
        self.dtype = dtype

    def predict(self, batch: Batch) -> List[Prediction]:
        """Predict every scene of ``batch``."""
        self.model.eval()
        with precision(self.dtype):
            preds = self.model(batch.inputs)
        results = []
        for row in range(batch.inputs.batch_size):
            index, box = select_target(preds, row)
            boxes = [preds.box(row, q) for q in range(preds.num_queries)]
            scores = preds.candidates.scores[row, preds.candidates.selected[row]]
            kept = nms(boxes, scores, NMS_THRESHOLD)
            results.append(Prediction(box, index, [boxes[k] for k in kept]))
        return results


class OraclePredictor:
    """Resolves each utterance symbolically against the true actors."""

    name = "oracle"

    def __init__(self, vocabulary: Vocabulary) -> None:
        """Instantiate class."""
        self.vocabulary = vocabulary

    def predict(self, batch: Batch) -> List[Prediction]:
        """Box of the actor each utterance describes.

        Raises:
            ConfigurationError: A scene was read without its actor annotations.

        """
        results = []
        for scene in batch.scenes:
            if not scene.annotated:
                raise ConfigurationError(
                    f"scene {scene.scene_id} has no {ANNOTATION_SUFFIX} sidecar; "
                    "the oracle needs the actors"
                )
            box = ground_words(scene.actors, scene.words(self.vocabulary)).box
            results.append(Prediction(box, None, [box]))
        return results


class RandomPredictor:
    """Upright boxes of person-like size dropped anywhere in the sensor view."""

    name = "random"

    def __init__(self, seed: int = 0) -> None:
        """Instantiate class."""
        self.seed = seed

    def draw(self, scene_id: str) -> Box3D:
        """Random box for one scene, reproducible from the seed and scene id."""
        index = zlib.crc32(scene_id.encode("utf-8"))
        rng = np.random.default_rng(child_seed(self.seed, index))
        l, w, h = (rng.uniform(low, high) for low, high in RANDOM_EXTENTS)
        return Box3D(
            x=rng.uniform(*X_LIMITS),
            y=rng.uniform(-Y_LIMIT, Y_LIMIT),
            z=GROUND_Z + h / 2,
            l=l,
            w=w,
            h=h,
            theta=rng.uniform(-np.pi, np.pi),
        )

    def predict(self, batch: Batch) -> List[Prediction]:
        """One random box per scene."""
        boxes = [self.draw(scene.scene_id) for scene in batch.scenes]
        return [Prediction(box, None, [box]) for box in boxes]


def load_model(
    checkpoint: Path, config: ModelConfig, vocab_size: int, dtype: str = "float32"
) -> GroundingModel:
    """Build a network for ``config`` and load the parameters of ``checkpoint``.

    Raises:
        CheckpointFormatError: The file is not a checkpoint.
        CheckpointMismatchError: The checkpoint was trained with other
            dimensions or variant switches.

    """
    with precision(dtype):
        model = GroundingModel(config, vocab_size, np.random.default_rng(0))
    model.load_state_dict(load_checkpoint(checkpoint))
    LOGGER.verbose("loaded %s", checkpoint)
    return model.eval()


def make_predictor(
    kind: Predictor,
    *,
    model: Optional[GroundingModel] = None,
    vocabulary: Optional[Vocabulary] = None,
    seed: int = 0,
    dtype: str = "float32",
) -> GroundingPredictor:
    """Predictor by name.

    Raises:
        ConfigurationError: ``model`` needs a network or ``oracle`` a vocabulary.

    """
    if kind == "model":
        if model is None:
            raise ConfigurationError("the model predictor needs a checkpoint")
        return ModelPredictor(model, dtype)
    if kind == "oracle":
        if vocabulary is None:
            raise ConfigurationError("the oracle predictor needs a vocabulary")
        return OraclePredictor(vocabulary)
    if kind == "random":
        return RandomPredictor(seed)
    raise ConfigurationError(f"unknown predictor {kind!r}")


class EvaluationResult(NamedTuple):
    """Records, their summary and the candidate boxes behind them."""

    records: List[EvalRecord]
    summary: EvalSummary
    detections: List[List[Box3D]]


def _timed(
    predictor: GroundingPredictor, batch: Batch
) -> Tuple[List[Prediction], float]:
    started = time.perf_counter()
    predictions = predictor.predict(batch)
    return predictions, time.perf_counter() - started


def evaluate(
    dataset: SceneDataset,
    paths: Sequence[Path],
    predictor: GroundingPredictor,
    *,
    batch_size: int = 1,
    threads: int = 1,
) -> EvaluationResult:
    """Ground every scene of ``paths`` and score it.

    Latency is the wall-clock time of a predict call divided by the scenes
    it covered; with the default batch size of one it is per scene.

    Args:
        dataset: Where the scenes are read from.
        paths: Scenes to evaluate.
        predictor: What grounds the utterances.
        batch_size: Scenes per predict call.
        threads: Batches predicted concurrently.

    Raises:
        EmptyRecordsError: ``paths`` is empty.

    """
    batches = list(dataset.batches(paths, batch_size, prefetch=0))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [
                executor.submit(contextvars.copy_context().run, _timed, predictor, b)
                for b in batches
            ]
            outcomes = [future.result() for future in futures]
    else:
        outcomes = [_timed(predictor, batch) for batch in batches]
    records: List[EvalRecord] = []
    detections: List[List[Box3D]] = []
    elapsed = 0.0
    for batch, (predictions, seconds) in zip(batches, outcomes):
        elapsed += seconds
        for scene, prediction in zip(batch.scenes, predictions):
            records.append(
                make_record(
                    scene.scene_id,
                    prediction.box,
                    scene.gt_box,
                    prediction.query_index,
                )
            )
            detections.append(list(prediction.detections))
    latency_ms = 1000.0 * elapsed / len(records) if records else None
    summary = summarize(records, detections, latency_ms)
    LOGGER.info(
        "%s predictor: Acc@0.25 %.4f, Acc@0.5 %.4f, mIoU %.4f over %d scenes",
        predictor.name,
        summary.acc_025,
        summary.acc_05,
        summary.miou,
        summary.n_samples,
    )
    return EvaluationResult(records, summary, detections)


def write_evaluation(result: EvaluationResult, out: Path) -> Tuple[Path, Path]:
    """Write ``summary.csv`` and ``records.csv`` into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    return (
        write_summary(result.summary, out / SUMMARY_NAME),
        write_records(result.records, out / RECORDS_NAME),
    )
