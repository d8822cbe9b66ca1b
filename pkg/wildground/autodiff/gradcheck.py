"""Finite-difference verification of backpropagated gradients."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from . import functional as F
from .tensor import Tape, Tensor

STEP: float = 1e-5
TOLERANCE: float = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Normwise relative error ``max|a - n| / max(|a|, |n|, 1e-8)``."""
    if analytic.size == 0:
        return 0.0
    scale = max(float(np.abs(analytic).max()), float(np.abs(numeric).max()), 1e-8)
    return float(np.abs(analytic - numeric).max()) / scale


def check_gradients(
    func: Callable[[], Tensor],
    wrt: Sequence[Tensor],
    *,
    rng: Optional[np.random.Generator] = None,
    step: float = STEP,
    max_entries: Optional[int] = None,
) -> float:
    """Compare tape gradients of ``func`` against central differences.

    The output of ``func`` is reduced to a scalar with fixed random weights so
    every output element contributes. ``func`` must be deterministic; it is
    called twice per checked entry.

    Args:
        func: Builds the output from the tensors in ``wrt`` (closing over them).
        wrt: Float64 tensors with ``requires_grad`` set.
        rng: Source of projection weights and of sampled entries.
        step: Finite-difference step.
        max_entries: Check at most this many entries of each tensor.

    Returns:
        Largest relative error over ``wrt``.

    """
    rng = rng or np.random.default_rng(0)
    output = func()
    weights = rng.standard_normal(output.shape)

    def objective() -> float:
        return float((func().data * weights).sum())

    for tensor in wrt:
        tensor.zero_grad()
    with Tape() as tape:
        out = func()
        scalar = F.sum(F.mul(out, Tensor.wrap(weights.astype(out.dtype))))
    tape.backward(scalar)

    worst = 0.0
    for tensor in wrt:
        analytic = (
            np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad.copy()
        )
        flat = tensor.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        numeric = np.zeros(len(entries))
        for slot, entry in enumerate(entries):
            original = flat[entry]
            flat[entry] = original + step
            upper = objective()
            flat[entry] = original - step
            lower = objective()
            flat[entry] = original
            numeric[slot] = (upper - lower) / (2 * step)
        worst = max(worst, relative_error(analytic.reshape(-1)[entries], numeric))
    return worst

