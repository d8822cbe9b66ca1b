"""Test wildground.autodiff.functional."""
# pylint: disable=no-self-use,protected-access,unused-argument
from __future__ import annotations

from typing import Callable, List

import numpy as np
import pytest

from wildground.autodiff import functional as F
from wildground.autodiff.gradcheck import TOLERANCE, check_gradients
from wildground.autodiff.tensor import Tape, Tensor
from wildground.exceptions import DimensionError

MODULE = "wildground.autodiff.functional"


def grad_of(func: Callable[[Tensor], Tensor], values: np.ndarray) -> np.ndarray:
    """Gradient of ``func(x).sum()`` at ``values``."""
    x = Tensor(values, requires_grad=True)
    with Tape() as tape:
        loss = F.sum(func(x))
    tape.backward(loss)
    assert x.grad is not None
    return x.grad


class TestBroadcasting:
    """Test broadcasting of the binary ops."""

    def test_add_unbroadcast(self) -> None:
        """Test add sums the gradient over broadcast axes."""
        a = Tensor(np.ones((3, 4)), requires_grad=True)
        b = Tensor(np.ones((1, 4)), requires_grad=True)
        c = Tensor(np.ones(4), requires_grad=True)
        with Tape() as tape:
            loss = F.sum(F.add(F.add(a, b), c))
        tape.backward(loss)
        np.testing.assert_allclose(a.grad, np.ones((3, 4)))
        np.testing.assert_allclose(b.grad, np.full((1, 4), 3.0))
        np.testing.assert_allclose(c.grad, np.full(4, 3.0))

    @pytest.mark.parametrize("op", [F.add, F.sub, F.mul, F.div])
    def test_incompatible(self, op: Callable[..., Tensor]) -> None:
        """Test incompatible shapes raise DimensionError."""
        with pytest.raises(DimensionError) as excinfo:
            op(Tensor(np.ones(3)), Tensor(np.ones(4)))
        assert excinfo.value.shapes == ((3,), (4,))

    def test_unbroadcast(self) -> None:
        """Test unbroadcast."""
        grad = np.ones((2, 3, 4))
        assert F.unbroadcast(grad, (3, 1)).tolist() == [[8.0]] * 3
        assert F.unbroadcast(grad, ()).item() == 24.0


class TestMatmul:
    """Test matmul."""

    def test_batched(self) -> None:
        """Test batched operands broadcast over leading axes."""
        rng = np.random.default_rng(0)
        a = rng.standard_normal((2, 3, 4))
        b = rng.standard_normal((4, 5))
        out = F.matmul(Tensor(a), Tensor(b))
        np.testing.assert_allclose(out.data, a @ b)

    @pytest.mark.parametrize(
        "shape_a, shape_b", [((2, 3), (4, 5)), ((3,), (3, 2)), ((2, 2, 3), (3, 3, 1))]
    )
    def test_incompatible(self, shape_a: List[int], shape_b: List[int]) -> None:
        """Test incompatible operands."""
        with pytest.raises(DimensionError, match="matmul"):
            F.matmul(Tensor(np.ones(shape_a)), Tensor(np.ones(shape_b)))


class TestReductions:
    """Test sum, mean and max."""

    def test_max_ties_split(self) -> None:
        """Test tied maxima share the gradient."""
        grad = grad_of(lambda x: F.max(x, axis=1), np.array([[1.0, 3.0, 3.0]]))
        np.testing.assert_allclose(grad, [[0.0, 0.5, 0.5]])

    def test_mean_empty(self) -> None:
        """Test mean over an empty axis."""
        with pytest.raises(DimensionError, match="empty reduction"):
            F.mean(Tensor(np.zeros((0, 3))), axis=0)

    def test_mean_keepdims(self) -> None:
        """Test mean with keepdims."""
        out = F.mean(Tensor(np.arange(6.0).reshape(2, 3)), axis=1, keepdims=True)
        np.testing.assert_allclose(out.data, [[1.0], [4.0]])

    def test_sum_axes(self) -> None:
        """Test sum over several axes."""
        grad = grad_of(lambda x: F.sum(x, axis=(0, 2)), np.ones((2, 3, 4)))
        np.testing.assert_allclose(grad, np.ones((2, 3, 4)))


class TestSelection:
    """Test the indexing ops."""

    def test_gather(self) -> None:
        """Test gather with a batched index."""
        x = np.arange(12.0).reshape(2, 3, 2)
        out = F.gather(Tensor(x), np.array([[2, 0], [1, 1]]))
        np.testing.assert_allclose(out.data, [[[4, 5], [0, 1]], [[8, 9], [8, 9]]])
        grad = grad_of(lambda t: F.gather(t, np.array([[2, 0], [1, 1]])), x)
        np.testing.assert_allclose(grad[1], [[0, 0], [2, 2], [0, 0]])

    @pytest.mark.parametrize("index", [[3], [-1]])
    def test_gather_out_of_range(self, index: List[int]) -> None:
        """Test gather with an index outside the rows."""
        with pytest.raises(DimensionError, match="index out of range"):
            F.gather(Tensor(np.ones((3, 2))), np.array(index))

    def test_getitem_repeated(self) -> None:
        """Test repeated indices accumulate gradient."""
        grad = grad_of(lambda x: F.getitem(x, np.array([0, 0, 2])), np.ones(3))
        np.testing.assert_allclose(grad, [2.0, 0.0, 1.0])

    def test_masked_fill(self) -> None:
        """Test masked entries take the value and get no gradient."""
        mask = np.array([True, False, True])
        out = F.masked_fill(Tensor([1.0, 2.0, 3.0]), mask, -5.0)
        np.testing.assert_allclose(out.data, [-5.0, 2.0, -5.0])
        grad = grad_of(lambda x: F.masked_fill(x, mask, 0.0), np.ones(3))
        np.testing.assert_allclose(grad, [0.0, 1.0, 0.0])

    def test_minimum_ties(self) -> None:
        """Test minimum splits the gradient of tied entries."""
        a = Tensor([1.0, 2.0, 5.0], requires_grad=True)
        b = Tensor([3.0, 2.0, 4.0], requires_grad=True)
        with Tape() as tape:
            loss = F.sum(F.minimum(a, b))
        tape.backward(loss)
        np.testing.assert_allclose(a.grad, [1.0, 0.5, 0.0])
        np.testing.assert_allclose(b.grad, [0.0, 0.5, 1.0])

    def test_clip(self) -> None:
        """Test clip passes the gradient inside the range only."""
        grad = grad_of(lambda x: F.clip(x, 0.0, 1.0), np.array([-1.0, 0.5, 2.0]))
        np.testing.assert_allclose(grad, [0.0, 1.0, 0.0])


class TestJoin:
    """Test concat and stack."""

    def test_concat(self) -> None:
        """Test concat splits the gradient back."""
        a = Tensor(np.ones((2, 2)), requires_grad=True)
        b = Tensor(np.ones((1, 2)), requires_grad=True)
        with Tape() as tape:
            out = F.concat([a, b], axis=0)
            loss = F.sum(F.mul(out, Tensor(np.arange(6.0).reshape(3, 2))))
        tape.backward(loss)
        assert out.shape == (3, 2)
        np.testing.assert_allclose(b.grad, [[4.0, 5.0]])

    @pytest.mark.parametrize("op", [F.concat, F.stack])
    def test_empty(self, op: Callable[..., Tensor]) -> None:
        """Test joining nothing."""
        with pytest.raises(DimensionError, match="nothing to"):
            op([])

    def test_stack_mismatch(self) -> None:
        """Test stack of different shapes."""
        with pytest.raises(DimensionError, match="stack"):
            F.stack([Tensor(np.ones(2)), Tensor(np.ones(3))])


class TestNormalization:
    """Test softmax, layer_norm, l2_normalize and cross_entropy."""

    def test_cross_entropy_zero_target(self) -> None:
        """Test an all-zero target row gives zero loss and gradient."""
        target = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        logits = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
        out = F.cross_entropy(Tensor(logits), target)
        np.testing.assert_allclose(out.data, [0.0, np.log(3.0)])
        grad = grad_of(lambda x: F.cross_entropy(x, target), logits)
        np.testing.assert_allclose(grad[0], np.zeros(3))

    def test_cross_entropy_shape(self) -> None:
        """Test a target of another shape."""
        with pytest.raises(DimensionError, match="cross_entropy"):
            F.cross_entropy(Tensor(np.zeros((2, 3))), np.zeros((2, 2)))

    def test_l2_normalize(self) -> None:
        """Test l2_normalize."""
        out = F.l2_normalize(Tensor([[3.0, 4.0]]))
        np.testing.assert_allclose(out.data, [[0.6, 0.8]])

    def test_layer_norm(self) -> None:
        """Test layer_norm standardizes the last axis."""
        x = np.random.default_rng(1).normal(3.0, 2.0, size=(4, 16))
        out = F.layer_norm(Tensor(x), Tensor(np.ones(16)), Tensor(np.zeros(16)))
        np.testing.assert_allclose(out.data.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.data.var(axis=-1), 1.0, rtol=1e-3)

    def test_layer_norm_mismatch(self) -> None:
        """Test layer_norm with a gain of the wrong width."""
        with pytest.raises(DimensionError, match="layer_norm"):
            F.layer_norm(
                Tensor(np.ones((2, 3))), Tensor(np.ones(4)), Tensor(np.zeros(4))
            )

    def test_softmax_stable(self) -> None:
        """Test softmax of large logits."""
        out = F.softmax(Tensor([[1000.0, 1000.0], [0.0, -1000.0]]))
        np.testing.assert_allclose(out.data, [[0.5, 0.5], [1.0, 0.0]])
        logs = F.log_softmax(Tensor([[1000.0, 1000.0]]))
        np.testing.assert_allclose(logs.data, [[-np.log(2.0)] * 2])


class TestDropout:
    """Test dropout."""

    def test_eval_identity(self) -> None:
        """Test dropout outside training leaves values and generator alone."""
        rng = np.random.default_rng(3)
        x = Tensor(np.ones(8))
        assert F.dropout(x, 0.5, rng, training=False) is x
        assert F.dropout(x, 0.0, rng) is x
        assert rng.random() == np.random.default_rng(3).random()

    def test_training_scales(self) -> None:
        """Test kept activations are scaled by the keep probability."""
        out = F.dropout(Tensor(np.ones(1000)), 0.5, np.random.default_rng(0))
        assert set(np.unique(out.data)) <= {0.0, 2.0}
        assert 400 < np.count_nonzero(out.data) < 600

    @pytest.mark.parametrize("rate", [-0.1, 1.0])
    def test_invalid_rate(self, rate: float) -> None:
        """Test rates outside [0, 1)."""
        with pytest.raises(ValueError, match="dropout rate"):
            F.dropout(Tensor(np.ones(2)), rate, np.random.default_rng(0))


class TestGradients:
    """Test analytic gradients against central differences."""

    @pytest.mark.parametrize(
        "func",
        [
            F.sigmoid,
            F.softplus,
            lambda x: F.softmax(x, axis=0),
            lambda x: F.log_softmax(x, axis=1),
            F.l2_normalize,
            lambda x: F.transpose(F.exp(x), (1, 0)),
            lambda x: F.sqrt(F.add(F.mul(x, x), 1.0)),
        ],
    )
    def test_smooth_ops(self, func: Callable[[Tensor], Tensor], float64: None) -> None:
        """Test smooth ops pass the finite-difference check."""
        values = np.random.default_rng(5).standard_normal((3, 4))
        x = Tensor(values, requires_grad=True)
        assert check_gradients(lambda: func(x), [x]) < TOLERANCE

    def test_linear(self, float64: None) -> None:
        """Test linear with every input differentiated."""
        rng = np.random.default_rng(6)
        x = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        w = Tensor(rng.standard_normal((4, 5)), requires_grad=True)
        b = Tensor(rng.standard_normal(5), requires_grad=True)
        assert check_gradients(lambda: F.linear(x, w, b), [x, w, b]) < TOLERANCE

    def test_detects_wrong_backward(self, float64: None) -> None:
        """Test a corrupted backward rule is caught."""
        x = Tensor([0.3, -0.7, 1.1], requires_grad=True)

        def doubled() -> Tensor:
            return F._finish("double", x.data * 2.0, (x,), lambda g: (g * 3.0,))

        assert check_gradients(doubled, [x]) > TOLERANCE
