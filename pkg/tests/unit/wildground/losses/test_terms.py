"""Test wildground.losses.terms."""
# pylint: disable=no-self-use,unused-argument
from __future__ import annotations

import numpy as np
import pytest

from wildground.autodiff.gradcheck import TOLERANCE, check_gradients
from wildground.autodiff.tensor import Tensor
from wildground.exceptions import MissingSpanError
from wildground.losses.terms import (
    box_losses,
    contrastive_loss,
    focal_confidence_loss,
    soft_token_loss,
    soft_token_targets,
    span_target,
)

from ...factories import make_box

MODULE = "wildground.losses.terms"


def bce(logits: np.ndarray, mask: np.ndarray, alpha: float) -> float:
    """Alpha-weighted binary cross-entropy."""
    prob = 1.0 / (1.0 + np.exp(-logits))
    loss = np.where(mask, -alpha * np.log(prob), -(1 - alpha) * np.log(1 - prob))
    return float(loss.mean())


def test_span_target() -> None:
    """Test span_target."""
    np.testing.assert_allclose(span_target(5, (1, 3)), [0, 0.5, 0.5, 0, 0])


class TestSoftTokenTargets:
    """Test soft_token_targets and soft_token_loss."""

    def test_targets(self) -> None:
        """Test only the matched query points at the target span."""
        target = soft_token_targets([(0, 2), (4, 5)], 3, 5, matched=1)
        np.testing.assert_allclose(target[1], [0.5, 0.5, 0, 0, 0])
        np.testing.assert_allclose(target[0], [0, 0, 0, 0, 1])
        np.testing.assert_allclose(target[2], target[0])

    @pytest.mark.parametrize("spans, missing", [([], "terminal"), ([(0, 1)], "target")])
    def test_targets_missing(self, spans: list, missing: str) -> None:
        """Test utterances without a target or terminal span."""
        with pytest.raises(MissingSpanError) as excinfo:
            soft_token_targets(spans, 2, 3, 0)
        assert excinfo.value.role == missing

    def test_loss(self) -> None:
        """Test confident correct alignments give a loss near zero."""
        logits = np.full((2, 3), -20.0)
        logits[0, 0] = 20.0
        logits[1, 2] = 20.0
        loss = soft_token_loss(Tensor(logits), 0, [(0, 1), (2, 3)])
        assert loss.item() < 1e-8
        wrong = soft_token_loss(Tensor(logits), 1, [(0, 1), (2, 3)])
        assert wrong.item() > 10


class TestFocalConfidenceLoss:
    """Test focal_confidence_loss."""

    def test_gamma_zero(self) -> None:
        """Test the unfocused loss is weighted binary cross-entropy."""
        logits = np.array([-2.0, 0.5, 3.0, 0.0])
        mask = np.array([True, False, True, False])
        loss = focal_confidence_loss(Tensor(logits), mask, alpha=0.25, gamma=0.0)
        assert loss.item() == pytest.approx(bce(logits, mask, 0.25))

    def test_focusing(self) -> None:
        """Test easy examples lose more weight than hard ones."""
        mask = np.array([True])
        easy = [
            focal_confidence_loss(Tensor([4.0]), mask, gamma=gamma).item()
            for gamma in (0.0, 2.0)
        ]
        hard = [
            focal_confidence_loss(Tensor([-4.0]), mask, gamma=gamma).item()
            for gamma in (0.0, 2.0)
        ]
        assert easy[1] / easy[0] < hard[1] / hard[0]

    def test_clip(self) -> None:
        """Test logits beyond the clip value score like the clip value."""
        mask = np.array([False])
        clipped = focal_confidence_loss(Tensor([15.0]), mask).item()
        assert focal_confidence_loss(Tensor([400.0]), mask).item() == clipped
        assert np.isfinite(clipped)

    def test_gradients(self, float64: None) -> None:
        """Test the focal loss gradient."""
        logits = Tensor([-1.3, 0.4, 2.2], requires_grad=True)
        mask = np.array([True, False, False])
        error = check_gradients(lambda: focal_confidence_loss(logits, mask), [logits])
        assert error < TOLERANCE


class TestBoxLosses:
    """Test box_losses."""

    def test_exact(self) -> None:
        """Test a perfect prediction costs nothing."""
        gt = make_box(x=1.0, l=2.0)
        l1, giou = box_losses(Tensor(gt.aabb_params()), gt)
        assert l1.item() == 0.0
        assert giou.item() == pytest.approx(0.0, abs=1e-12)

    def test_offset(self) -> None:
        """Test a shifted prediction."""
        gt = make_box()
        pred = Tensor(np.array([0.5, 0.0, 0.0, 1.0, 1.0, 1.0]))
        l1, giou = box_losses(pred, gt)
        assert l1.item() == pytest.approx(0.5 / 6)
        # overlap 0.5, union 1.5, enclosing volume 1.5
        assert giou.item() == pytest.approx(1 - 1 / 3)


class TestContrastiveLoss:
    """Test contrastive_loss."""

    SPANS = [(0, 2), (2, 3), (3, 4)]

    def test_aligned(self) -> None:
        """Test aligned projections score lower than swapped ones."""
        words = Tensor(np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 0, 1.0], [0, 1.0, 0]]))
        queries = Tensor(np.array([[0, 1.0, 0], [1.0, 0, 0], [0, 1.0, 0]]))
        aligned = contrastive_loss(queries, words, 1, self.SPANS).item()
        swapped = contrastive_loss(queries, words, 0, self.SPANS).item()
        assert aligned < swapped

    def test_single_query(self) -> None:
        """Test a single query has no terminal positives."""
        words = Tensor(np.eye(4)[:, :3])
        loss = contrastive_loss(Tensor([[1.0, 0.0, 0.0]]), words, 0, self.SPANS)
        assert np.isfinite(loss.item())

    def test_missing_span(self) -> None:
        """Test an utterance holding only its terminal span."""
        with pytest.raises(MissingSpanError) as excinfo:
            contrastive_loss(Tensor(np.eye(2)), Tensor(np.eye(2)), 0, [(0, 2)])
        assert excinfo.value.role == "target"

    def test_gradients(self, float64: None, rng: np.random.Generator) -> None:
        """Test the contrastive loss gradient."""
        queries = Tensor(rng.standard_normal((3, 4)) * 0.1, requires_grad=True)
        words = Tensor(rng.standard_normal((4, 4)) * 0.1, requires_grad=True)
        error = check_gradients(
            lambda: contrastive_loss(queries, words, 2, self.SPANS), [queries, words]
        )
        assert error < TOLERANCE
