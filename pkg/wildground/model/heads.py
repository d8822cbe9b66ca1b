"""Query selection, prediction heads and target selection."""
from __future__ import annotations

from typing import List, NamedTuple, Tuple

import numpy as np

from ..autodiff import Tensor, functional as F
from ..autodiff.nn import MASK_VALUE, MLP, Linear, Module
from ..exceptions import ConfigurationError, MissingSpanError
from ..geometry.boxes import Box3D
from ..type_defs import Span


class QueryCandidates(NamedTuple):
    """Seeds promoted to decoder queries."""

    logits: Tensor
    """``B×S`` confidence logits of every seed."""

    scores: np.ndarray
    """``B×S`` sigmoid confidences."""

    selected: np.ndarray
    """``B×N`` seed indices, highest confidence first."""

    features: Tensor
    """``B×N×C`` visual features of the selected seeds."""

    reference_positions: np.ndarray
    """``B×N×3`` positions of the selected seeds."""

    seed_positions: np.ndarray
    """``B×S×3`` positions of every seed."""


def rank_seeds(scores: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` highest scores per row, ties to the lower index."""
    return np.argsort(-scores, axis=-1, kind="stable")[..., :count]


def select_queries(
    visual: Tensor, logits: Tensor, positions: np.ndarray, count: int
) -> QueryCandidates:
    """Promote the ``count`` most confident seeds to queries.

    Args:
        visual: ``B×S×C`` comprehensive visual features.
        logits: ``B×S`` confidence logits.
        positions: ``B×S×3`` seed positions.
        count: Number of queries N.

    Raises:
        ConfigurationError: ``count`` exceeds the number of seeds.

    """
    seeds = visual.shape[1]
    if count > seeds:
        raise ConfigurationError(f"{count} queries requested from {seeds} seeds")
    scores = 1.0 / (1.0 + np.exp(-logits.data.astype(np.float64)))
    selected = rank_seeds(scores, count)
    reference = np.take_along_axis(positions, selected[..., None], axis=1)
    return QueryCandidates(
        logits, scores, selected, F.gather(visual, selected), reference, positions
    )


class Predictions(NamedTuple):
    """Decoder outputs for a batch."""

    centers: Tensor
    """``B×N×3`` box centers."""

    sizes: Tensor
    """``B×N×3`` positive box extents ``(l, w, h)``."""

    span_logits: Tensor
    """``B×N×M`` unnormalized query-to-word scores (padding at ``-1e9``)."""

    query_proj: Tensor
    """``B×N×D`` unit-norm query projections."""

    word_proj: Tensor
    """``B×M×D`` unit-norm word projections."""

    candidates: QueryCandidates
    text_mask: np.ndarray
    spans: List[List[Span]]

    def boxes(self) -> Tensor:
        """``B×N×6`` axis-aligned box parameters ``(x, y, z, l, w, h)``."""
        return F.concat([self.centers, self.sizes], axis=-1)

    def box(self, row: int, query: int) -> Box3D:
        """Box of one query as a :class:`Box3D`."""
        return Box3D.from_array(
            np.concatenate(
                [self.centers.data[row, query], self.sizes.data[row, query]]
            ).astype(np.float64)
        )

    @property
    def num_queries(self) -> int:
        """N."""
        return self.centers.shape[1]


def _terminal(preds: Predictions, row: int) -> Span:
    spans = preds.spans[row]
    if not spans:
        raise MissingSpanError("terminal")
    return spans[-1]


def select_target(preds: Predictions, row: int = 0) -> Tuple[int, Box3D]:
    """Pick the query least similar to the ``not-mentioned`` words.

    Similarity is the cosine between a query projection and the mean
    projection of the terminal span; ties go to the lower query index.

    Raises:
        MissingSpanError: The utterance has no terminal span.

    """
    begin, end = _terminal(preds, row)
    terminal = preds.word_proj.data[row, begin:end].mean(axis=0)
    terminal = terminal / max(float(np.linalg.norm(terminal)), 1e-12)
    queries = preds.query_proj.data[row]
    norms = np.maximum(np.linalg.norm(queries, axis=-1), 1e-12)
    similarity = queries @ terminal / norms
    index = int(np.argmin(similarity))
    return index, preds.box(row, index)


class GroundingHeads(Module):
    """Confidence, box, span and projection heads."""

    def __init__(self, dim: int, proj_dim: int, rng: np.random.Generator) -> None:
        """Instantiate class."""
        super().__init__()
        self.dim = dim
        self.confidence = MLP([dim, dim, 1], rng)
        self.center = MLP([dim, dim, 3], rng)
        self.size = MLP([dim, dim, 3], rng)
        self.span_query = Linear(dim, dim, rng)
        self.span_word = Linear(dim, dim, rng)
        self.query_proj = Linear(dim, proj_dim, rng)
        self.word_proj = Linear(dim, proj_dim, rng)

    def seed_logits(self, visual: Tensor) -> Tensor:
        """``B×S`` confidence logits of ``B×S×C`` visual tokens."""
        logits = self.confidence(visual)
        return F.reshape(logits, logits.shape[:-1])

    def forward(
        self,
        queries: Tensor,
        text: Tensor,
        candidates: QueryCandidates,
        text_mask: np.ndarray,
        spans: List[List[Span]],
    ) -> Predictions:
        """Predict boxes, spans and projections from decoded ``B×N×C`` queries."""
        centers = F.add(self.center(queries), Tensor(candidates.reference_positions))
        sizes = F.exp(self.size(queries))
        scores = F.div(
            F.matmul(self.span_query(queries), F.transpose(self.span_word(text))),
            float(np.sqrt(self.dim)),
        )
        span_logits = F.masked_fill(scores, ~text_mask[:, None, :], MASK_VALUE)
        return Predictions(
            centers=centers,
            sizes=sizes,
            span_logits=span_logits,
            query_proj=F.l2_normalize(self.query_proj(queries)),
            word_proj=F.l2_normalize(self.word_proj(text)),
            candidates=candidates,
            text_mask=text_mask,
            spans=spans,
        )
