"""Test wildground.autodiff.gradcheck."""
# pylint: disable=no-self-use,unused-argument
from __future__ import annotations

import numpy as np
import pytest

from wildground.autodiff import functional as F
from wildground.autodiff.gradcheck import TOLERANCE, check_gradients, relative_error
from wildground.autodiff.tensor import Tensor

MODULE = "wildground.autodiff.gradcheck"


@pytest.mark.parametrize(
    "analytic, numeric, expected",
    [
        ([1.0, 2.0], [1.0, 2.0], 0.0),
        ([1.0, 2.0], [1.0, 1.0], 0.5),
        ([0.0], [0.0], 0.0),
        ([], [], 0.0),
    ],
)
def test_relative_error(analytic: list, numeric: list, expected: float) -> None:
    """Test relative_error."""
    assert relative_error(np.array(analytic), np.array(numeric)) == expected


def test_check_gradients_max_entries(float64: None) -> None:
    """Test only the sampled entries are perturbed."""
    calls = []
    x = Tensor(np.random.default_rng(2).standard_normal(50), requires_grad=True)

    def func() -> Tensor:
        calls.append(1)
        return F.mul(x, x)

    assert check_gradients(func, [x], max_entries=4) < TOLERANCE
    # shape pass, taped pass, then two evaluations per sampled entry
    assert len(calls) == 2 + 2 * 4


def test_check_gradients_restores_inputs(float64: None) -> None:
    """Test perturbed entries are put back."""
    values = np.array([0.2, -0.4, 0.9])
    x = Tensor(values, requires_grad=True)
    check_gradients(lambda: F.exp(x), [x])
    np.testing.assert_array_equal(x.data, values)
