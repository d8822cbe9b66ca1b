"""Test wildground.model.heads."""
# pylint: disable=no-self-use
from __future__ import annotations

from typing import List

import numpy as np
import pytest

from wildground.autodiff.tensor import Tensor
from wildground.exceptions import ConfigurationError, MissingSpanError
from wildground.model.heads import (
    GroundingHeads,
    Predictions,
    rank_seeds,
    select_queries,
    select_target,
)
from wildground.type_defs import Span

MODULE = "wildground.model.heads"


def make_predictions(
    query_proj: np.ndarray, word_proj: np.ndarray, spans: List[Span]
) -> Predictions:
    """Predictions for one utterance with unit boxes along x."""
    queries = query_proj.shape[0]
    centers = np.stack([np.arange(queries, dtype=float), np.zeros(queries)], axis=1)
    centers = np.concatenate([centers, np.zeros((queries, 1))], axis=1)
    candidates = select_queries(
        Tensor(np.zeros((1, queries, 2))),
        Tensor(np.zeros((1, queries))),
        centers[None],
        queries,
    )
    return Predictions(
        centers=Tensor(centers[None]),
        sizes=Tensor(np.ones((1, queries, 3))),
        span_logits=Tensor(np.zeros((1, queries, word_proj.shape[0]))),
        query_proj=Tensor(query_proj[None]),
        word_proj=Tensor(word_proj[None]),
        candidates=candidates,
        text_mask=np.ones((1, word_proj.shape[0]), dtype=bool),
        spans=[spans],
    )


@pytest.mark.parametrize(
    "scores, count, expected",
    [
        ([[0.1, 0.9, 0.5]], 2, [[1, 2]]),
        ([[0.5, 0.5, 0.5]], 2, [[0, 1]]),
        ([[0.2, 0.7, 0.7, 0.1]], 3, [[1, 2, 0]]),
    ],
)
def test_rank_seeds(scores: list, count: int, expected: list) -> None:
    """Test rank_seeds orders by confidence with ties to the lower index."""
    assert rank_seeds(np.array(scores), count).tolist() == expected


class TestSelectQueries:
    """Test select_queries."""

    def test_select(self, rng: np.random.Generator) -> None:
        """Test features and positions follow the selected seeds."""
        visual = Tensor(rng.standard_normal((1, 4, 6)))
        positions = rng.standard_normal((1, 4, 3))
        logits = Tensor(np.array([[-1.0, 3.0, 0.0, 2.0]]))
        candidates = select_queries(visual, logits, positions, 2)
        assert candidates.selected.tolist() == [[1, 3]]
        np.testing.assert_array_equal(
            candidates.features.data[0], visual.data[0, [1, 3]]
        )
        np.testing.assert_array_equal(
            candidates.reference_positions[0], positions[0, [1, 3]]
        )
        np.testing.assert_allclose(candidates.scores[0, 1], 1 / (1 + np.exp(-3.0)))

    def test_select_too_many(self) -> None:
        """Test asking for more queries than seeds."""
        with pytest.raises(ConfigurationError, match="5 queries requested from 4"):
            select_queries(
                Tensor(np.zeros((1, 4, 2))),
                Tensor(np.zeros((1, 4))),
                np.zeros((1, 4, 3)),
                5,
            )


class TestSelectTarget:
    """Test select_target."""

    def test_select_target(self) -> None:
        """Test the query least like the not-mentioned words wins."""
        query_proj = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.6, 0.8]])
        word_proj = np.array([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
        preds = make_predictions(query_proj, word_proj, [(0, 2), (2, 4)])
        index, box = select_target(preds)
        assert index == 2
        assert box.x == 2.0
        assert box.l == 1.0

    def test_select_target_tie(self) -> None:
        """Test equally dissimilar queries resolve to the lower index."""
        query_proj = np.array([[0.0, 1.0], [0.0, 1.0]])
        word_proj = np.array([[1.0, 0.0], [1.0, 0.0]])
        preds = make_predictions(query_proj, word_proj, [(0, 1), (1, 2)])
        assert select_target(preds)[0] == 0

    def test_select_target_terminal_only(self) -> None:
        """Test an utterance of just the terminal token."""
        preds = make_predictions(np.eye(2), np.array([[1.0, 0.0]]), [(0, 1)])
        assert select_target(preds)[0] == 1

    def test_select_target_missing_span(self) -> None:
        """Test an utterance without any span."""
        preds = make_predictions(np.eye(2), np.eye(2), [])
        with pytest.raises(MissingSpanError):
            select_target(preds)


class TestGroundingHeads:
    """Test GroundingHeads."""

    def test_forward(self, rng: np.random.Generator) -> None:
        """Test head output shapes and the span padding mask."""
        heads = GroundingHeads(8, 4, rng)
        visual = Tensor(rng.standard_normal((2, 6, 8)))
        logits = heads.seed_logits(visual)
        assert logits.shape == (2, 6)
        candidates = select_queries(visual, logits, rng.standard_normal((2, 6, 3)), 3)
        text = Tensor(rng.standard_normal((2, 5, 8)))
        mask = np.array([[True] * 5, [True, True, True, False, False]])
        spans = [[(0, 1), (4, 5)], [(0, 1), (2, 3)]]
        preds = heads(candidates.features, text, candidates, mask, spans)
        assert preds.num_queries == 3
        assert preds.boxes().shape == (2, 3, 6)
        assert (preds.sizes.data > 0).all()
        assert (preds.span_logits.data[1, :, 3:] < -1e8).all()
        np.testing.assert_allclose(
            np.linalg.norm(preds.query_proj.data, axis=-1), 1.0, rtol=1e-9
        )
        assert preds.box(1, 2).l == pytest.approx(float(preds.sizes.data[1, 2, 0]))
