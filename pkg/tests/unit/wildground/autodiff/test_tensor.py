"""Test wildground.autodiff.tensor."""
# pylint: disable=no-self-use,protected-access
from __future__ import annotations

import numpy as np
import pytest

from wildground.autodiff import functional as F
from wildground.autodiff.tensor import (
    Parameter,
    Tape,
    Tensor,
    current_tape,
    default_dtype,
    precision,
)
from wildground.exceptions import NonFiniteError, TapeError

MODULE = "wildground.autodiff.tensor"


class TestParameter:
    """Test Parameter."""

    def test___init__(self) -> None:
        """Test __init__."""
        param = Parameter(np.zeros((2, 3)))
        assert param.requires_grad
        assert not param.has_grad

    def test_assign(self) -> None:
        """Test assign."""
        param = Parameter(np.zeros(3))
        param.assign(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(param.data, [1.0, 2.0, 3.0])

    def test_assign_shape_mismatch(self) -> None:
        """Test assign with a different shape."""
        with pytest.raises(ValueError, match="cannot assign shape"):
            Parameter(np.zeros(3)).assign(np.zeros(4))


class TestTape:
    """Test Tape."""

    def test_backward(self) -> None:
        """Test backward."""
        x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
        with Tape() as tape:
            loss = (x * x).sum()
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, [2.0, -4.0, 6.0])
        assert tape.consumed
        assert current_tape() is None

    def test_backward_accumulates_shared_inputs(self) -> None:
        """Test backward when one tensor feeds several ops."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = x * x
            loss = (y + y).sum()
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, [4.0, 8.0])
        assert tape.visit_counts == [1] * len(tape)

    def test_backward_accumulates_across_tapes(self) -> None:
        """Test gradients of two passes add up until cleared."""
        x = Tensor([3.0], requires_grad=True)
        for _ in range(2):
            with Tape() as tape:
                loss = (x * 2.0).sum()
            tape.backward(loss)
        np.testing.assert_allclose(x.grad, [4.0])
        x.zero_grad()
        assert x.grad is None

    def test_backward_explicit_grad(self) -> None:
        """Test backward from a non-scalar root with an upstream gradient."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = x * 3.0
        tape.backward(y, np.array([1.0, -1.0]))
        np.testing.assert_allclose(x.grad, [3.0, -3.0])

    def test_backward_inside_context(self) -> None:
        """Test backward while still recording."""
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            loss = x.sum()
            with pytest.raises(TapeError, match="after the recording context"):
                tape.backward(loss)

    def test_backward_non_scalar(self) -> None:
        """Test backward from a non-scalar root without a gradient."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = x * 2.0
        with pytest.raises(TapeError, match="non-scalar"):
            tape.backward(y)
        assert not tape.consumed

    def test_backward_twice(self) -> None:
        """Test a tape cannot be replayed."""
        x = Tensor([1.0], requires_grad=True)
        with Tape() as tape:
            loss = x.sum()
        tape.backward(loss)
        with pytest.raises(TapeError, match="already used"):
            tape.backward(loss)
        with pytest.raises(TapeError, match="already used"):
            with tape:
                pass

    def test_backward_unrecorded_leaf(self) -> None:
        """Test backward from a leaf that no op produced."""
        x = Tensor([2.0], requires_grad=True)
        with Tape() as tape:
            pass
        tape.backward(x)
        np.testing.assert_allclose(x.grad, [1.0])

    def test_record_requires_grad_input(self) -> None:
        """Test only ops with a gradient-requiring input are recorded."""
        x = Tensor([1.0, 2.0])
        w = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            constant = x * 2.0
            tracked = x * w
        assert len(tape) == 1
        assert not constant.requires_grad
        assert tracked.requires_grad

    def test_record_without_tape(self) -> None:
        """Test ops outside a tape are never recorded."""
        x = Tensor([1.0], requires_grad=True)
        assert not (x * 2.0).requires_grad

    def test_reenter(self) -> None:
        """Test entering an active tape."""
        with Tape() as tape:
            with pytest.raises(TapeError, match="already active"):
                tape.__enter__()


class TestTensor:
    """Test Tensor."""

    def test___init__copies(self) -> None:
        """Test __init__ does not alias its input."""
        values = np.ones(2)
        tensor = Tensor(values)
        values[0] = 5.0
        assert tensor.data[0] == 1.0
        assert tensor.grad is None

    def test_detach(self) -> None:
        """Test detach."""
        x = Tensor([1.0], requires_grad=True)
        assert not x.detach().requires_grad

    def test_item(self) -> None:
        """Test item."""
        assert Tensor([[2.5]]).item() == 2.5

    def test_numpy(self) -> None:
        """Test numpy returns a copy."""
        tensor = Tensor([1.0, 2.0])
        copy = tensor.numpy()
        copy[0] = 9.0
        assert tensor.data[0] == 1.0

    def test_non_finite_output(self) -> None:
        """Test ops refuse to return non-finite values."""
        with pytest.raises(NonFiniteError) as excinfo:
            F.log(Tensor([0.0, 1.0]))
        assert excinfo.value.op == "log"
        with pytest.raises(NonFiniteError, match="exp"):
            F.exp(Tensor([1000.0]))

    def test_operator_sugar(self) -> None:
        """Test arithmetic operators route to the functional ops."""
        a = Tensor([[1.0, 2.0]])
        b = Tensor([[3.0], [4.0]])
        np.testing.assert_allclose((a @ b).data, [[11.0]])
        np.testing.assert_allclose((1.0 - a).data, [[0.0, -1.0]])
        np.testing.assert_allclose((2.0 / a).data, [[2.0, 1.0]])
        np.testing.assert_allclose((-a).data, [[-1.0, -2.0]])
        assert a.reshape(2, 1).shape == (2, 1)
        assert b.transpose().shape == (1, 2)


class TestPrecision:
    """Test precision."""

    def test_float32(self) -> None:
        """Test tensors created in the context use float32."""
        with precision("float32") as dtype:
            assert dtype == np.float32
            assert Tensor([1.0]).dtype == np.float32
            assert default_dtype() == np.float32
        assert default_dtype() == np.float64

    @pytest.mark.parametrize("dtype", ["int32", "float16", "complex128"])
    def test_unsupported(self, dtype: str) -> None:
        """Test unsupported dtypes."""
        with pytest.raises(ValueError, match="unsupported tensor dtype"):
            with precision(dtype):
                pass

    def test_ops_keep_operand_dtype(self) -> None:
        """Test constants adopt the dtype of the tensor operand."""
        with precision("float32"):
            x = Tensor([1.0, 2.0])
        assert (x * 2.0).dtype == np.float32
        assert (x + np.array([1.0, 1.0])).dtype == np.float32
