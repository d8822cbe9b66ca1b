"""Differentiable operations.

Every function takes and returns :class:`~wildground.autodiff.tensor.Tensor`
values (plain numbers and arrays are accepted where an operand is constant).
Each op computes its output with numpy, refuses to return non-finite values,
and records a backward rule on the active tape when any input requires a
gradient.

"""
from __future__ import annotations

from typing import (
    Any,
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np

from ..exceptions import DimensionError, NonFiniteError
from .tensor import Tensor, current_tape

_F = TypeVar("_F", bound=Callable[..., Tensor])

Axis = Optional[Union[int, Tuple[int, ...]]]

DIFFERENTIABLE_OPS: Dict[str, Callable[..., Tensor]] = {}
"""Every registered differentiable op by name."""


def register(name: str) -> Callable[[_F], _F]:
    """Register a differentiable op under ``name``."""

    def decorator(func: _F) -> _F:
        DIFFERENTIABLE_OPS[name] = func
        return func

    return decorator


def as_tensor(value: Any, like: Optional[Tensor] = None) -> Tensor:
    """Wrap a constant as a tensor matching the dtype of ``like``."""
    if isinstance(value, Tensor):
        return value
    if like is not None:
        return Tensor.wrap(np.asarray(value, dtype=like.dtype))
    return Tensor(value)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes that broadcasting added or stretched."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _finish(
    op: str,
    data: np.ndarray,
    inputs: Sequence[Tensor],
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
) -> Tensor:
    data = np.asarray(data)
    if not np.isfinite(data).all():
        raise NonFiniteError(op)
    out = Tensor.wrap(data)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, inputs, out, backward)
    return out


def _operands(op: str, a: Any, b: Any) -> Tuple[Tensor, Tensor]:
    like = a if isinstance(a, Tensor) else b if isinstance(b, Tensor) else None
    ta, tb = as_tensor(a, like), as_tensor(b, like)
    try:
        np.broadcast_shapes(ta.shape, tb.shape)
    except ValueError:
        raise DimensionError(op, ta.shape, tb.shape) from None
    return ta, tb


def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def _expand_reduced(
    grad: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool
) -> np.ndarray:
    if not keepdims:
        for ax in _normalize_axes(axis, len(shape)):
            grad = np.expand_dims(grad, ax)
    return np.broadcast_to(grad, shape)


@register("add")
def add(a: Any, b: Any) -> Tensor:
    """Elementwise sum with broadcasting."""
    ta, tb = _operands("add", a, b)

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, ta.shape), unbroadcast(g, tb.shape)

    return _finish("add", ta.data + tb.data, (ta, tb), backward)


@register("sub")
def sub(a: Any, b: Any) -> Tensor:
    """Elementwise difference with broadcasting."""
    ta, tb = _operands("sub", a, b)

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, ta.shape), unbroadcast(-g, tb.shape)

    return _finish("sub", ta.data - tb.data, (ta, tb), backward)


@register("mul")
def mul(a: Any, b: Any) -> Tensor:
    """Elementwise product with broadcasting."""
    ta, tb = _operands("mul", a, b)

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g * tb.data, ta.shape), unbroadcast(g * ta.data, tb.shape)

    return _finish("mul", ta.data * tb.data, (ta, tb), backward)


@register("div")
def div(a: Any, b: Any) -> Tensor:
    """Elementwise quotient with broadcasting."""
    ta, tb = _operands("div", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ta.data / tb.data

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            unbroadcast(g / tb.data, ta.shape),
            unbroadcast(-g * ta.data / (tb.data * tb.data), tb.shape),
        )

    return _finish("div", out, (ta, tb), backward)


@register("neg")
def neg(x: Tensor) -> Tensor:
    """Elementwise negation."""

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (-g,)

    return _finish("neg", -x.data, (x,), backward)


@register("matmul")
def matmul(a: Any, b: Any) -> Tensor:
    """Matrix product over the last two axes, batched over leading axes.

    Raises:
        DimensionError: Inner extents differ or an operand has fewer than two
            axes.

    """
    like = a if isinstance(a, Tensor) else b if isinstance(b, Tensor) else None
    ta, tb = as_tensor(a, like), as_tensor(b, like)
    if ta.ndim < 2 or tb.ndim < 2 or ta.shape[-1] != tb.shape[-2]:
        raise DimensionError("matmul", ta.shape, tb.shape)
    try:
        np.broadcast_shapes(ta.shape[:-2], tb.shape[:-2])
    except ValueError:
        raise DimensionError("matmul", ta.shape, tb.shape) from None

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            unbroadcast(g @ np.swapaxes(tb.data, -1, -2), ta.shape),
            unbroadcast(np.swapaxes(ta.data, -1, -2) @ g, tb.shape),
        )

    return _finish("matmul", ta.data @ tb.data, (ta, tb), backward)


@register("transpose")
def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; swaps the last two when ``axes`` is omitted."""
    if axes is None:
        order = list(range(x.ndim))
        order[-2], order[-1] = order[-1], order[-2]
    else:
        order = [a % x.ndim for a in axes]
    inverse = np.argsort(order)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g.transpose(inverse),)

    return _finish("transpose", x.data.transpose(order), (x,), backward)


@register("reshape")
def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Same values, new shape."""
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError("reshape", x.shape, tuple(shape)) from None

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g.reshape(x.shape),)

    return _finish("reshape", out, (x,), backward)


def _plain_index(index: Any) -> Any:
    if isinstance(index, Tensor):
        return index.data.astype(np.int64)
    if isinstance(index, tuple):
        return tuple(_plain_index(i) for i in index)
    return index


@register("getitem")
def getitem(x: Tensor, index: Any) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate gradient."""
    index = _plain_index(index)
    out = np.array(x.data[index])

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        gx = np.zeros_like(x.data)
        np.add.at(gx, index, g)
        return (gx,)

    return _finish("getitem", out, (x,), backward)


@register("sum")
def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """Sum over ``axis`` (all axes by default)."""
    # pylint: disable=redefined-builtin

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (_expand_reduced(g, x.shape, axis, keepdims).copy(),)

    return _finish("sum", np.sum(x.data, axis=axis, keepdims=keepdims), (x,), backward)


@register("mean")
def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """Arithmetic mean over ``axis``.

    Raises:
        DimensionError: A reduced axis has zero length.

    """
    count = int(np.prod([x.shape[a] for a in _normalize_axes(axis, x.ndim)]))
    if count == 0:
        raise DimensionError("mean", x.shape, detail="empty reduction")

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (_expand_reduced(g, x.shape, axis, keepdims) / count,)

    return _finish(
        "mean", np.sum(x.data, axis=axis, keepdims=keepdims) / count, (x,), backward
    )


@register("max")
def max(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """Maximum over ``axis``; tied maxima share the gradient equally."""
    # pylint: disable=redefined-builtin
    kept = np.max(x.data, axis=axis, keepdims=True)
    winners = x.data == kept
    counts = winners.sum(axis=axis, keepdims=True)
    out = kept if keepdims else np.max(x.data, axis=axis)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        expanded = _expand_reduced(g, x.shape, axis, keepdims)
        return (expanded * winners / counts,)

    return _finish("max", out, (x,), backward)


@register("exp")
def exp(x: Tensor) -> Tensor:
    """Elementwise exponential."""
    with np.errstate(over="ignore"):
        out = np.exp(x.data)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * out,)

    return _finish("exp", out, (x,), backward)


@register("log")
def log(x: Tensor) -> Tensor:
    """Elementwise natural logarithm; non-positive inputs are an error."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(x.data)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g / x.data,)

    return _finish("log", out, (x,), backward)


@register("sqrt")
def sqrt(x: Tensor) -> Tensor:
    """Elementwise square root."""
    with np.errstate(invalid="ignore"):
        out = np.sqrt(x.data)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        with np.errstate(divide="ignore"):
            return (g * 0.5 / out,)

    return _finish("sqrt", out, (x,), backward)


@register("abs")
def abs(x: Tensor) -> Tensor:
    """Elementwise absolute value; subgradient 0 at 0."""
    # pylint: disable=redefined-builtin

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * np.sign(x.data),)

    return _finish("abs", np.abs(x.data), (x,), backward)


@register("relu")
def relu(x: Tensor) -> Tensor:
    """Rectified linear unit; subgradient 0 at 0."""

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * (x.data > 0),)

    return _finish("relu", np.maximum(x.data, 0), (x,), backward)


def _sigmoid(values: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0, -values))


@register("sigmoid")
def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, stable for large magnitudes."""
    out = _sigmoid(x.data)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * out * (1 - out),)

    return _finish("sigmoid", out, (x,), backward)


@register("softplus")
def softplus(x: Tensor) -> Tensor:
    """``log(1 + exp(x))`` without overflow."""

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * _sigmoid(x.data),)

    return _finish("softplus", np.logaddexp(0, x.data), (x,), backward)


def _select(op: str, a: Any, b: Any, take_a: Callable[..., np.ndarray]) -> Tensor:
    ta, tb = _operands(op, a, b)
    first = take_a(ta.data, tb.data)
    ties = ta.data == tb.data
    weight_a = np.where(ties, 0.5, first.astype(ta.dtype))

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            unbroadcast(g * weight_a, ta.shape),
            unbroadcast(g * (1 - weight_a), tb.shape),
        )

    out = np.where(first, ta.data, tb.data)
    return _finish(op, out, (ta, tb), backward)


@register("minimum")
def minimum(a: Any, b: Any) -> Tensor:
    """Elementwise minimum; ties split the gradient evenly."""
    return _select("minimum", a, b, np.less)


@register("maximum")
def maximum(a: Any, b: Any) -> Tensor:
    """Elementwise maximum; ties split the gradient evenly."""
    return _select("maximum", a, b, np.greater)


@register("clip")
def clip(x: Tensor, low: float, high: float) -> Tensor:
    """Clamp to ``[low, high]``; the gradient passes inside the closed range."""
    inside = (x.data >= low) & (x.data <= high)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * inside,)

    return _finish("clip", np.clip(x.data, low, high), (x,), backward)


def _softmax(values: np.ndarray, axis: int) -> np.ndarray:
    shifted = values - np.max(values, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


@register("softmax")
def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Normalized exponential along ``axis`` (max-subtracted)."""
    out = _softmax(x.data, axis)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _finish("softmax", out, (x,), backward)


@register("log_softmax")
def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Logarithm of :func:`softmax`, computed without forming the softmax."""
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _finish("log_softmax", out, (x,), backward)


@register("layer_norm")
def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Standardize the last axis with population variance, then scale and shift.

    Raises:
        DimensionError: The last axis is empty or ``gain``/``bias`` do not
            match its extent.

    """
    width = x.shape[-1] if x.ndim else 0
    if width == 0:
        raise DimensionError(
            "layer_norm", x.shape, detail="zero-length normalization axis"
        )
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError("layer_norm", x.shape, gain.shape, bias.shape)
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std
    lead = tuple(range(x.ndim - 1))

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        g_normed = g * gain.data
        gx = (
            inv_std
            / width
            * (
                width * g_normed
                - g_normed.sum(axis=-1, keepdims=True)
                - normed * (g_normed * normed).sum(axis=-1, keepdims=True)
            )
        )
        return gx, (g * normed).sum(axis=lead), g.sum(axis=lead)

    return _finish(
        "layer_norm", normed * gain.data + bias.data, (x, gain, bias), backward
    )


@register("dropout")
def dropout(
    x: Tensor, rate: float, rng: np.random.Generator, *, training: bool = True
) -> Tensor:
    """Inverted dropout: kept activations are scaled by ``1 / (1 - rate)``.

    Outside training, or with ``rate == 0``, ``x`` is returned unchanged and
    ``rng`` is not advanced.

    """
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1 - rate)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * keep,)

    return _finish("dropout", x.data * keep, (x,), backward)


@register("gather")
def gather(x: Tensor, index: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """Select rows of ``x`` along the second-to-last axis.

    ``x`` is ``S×C`` with a 1-D index, or ``B×S×C`` with a ``B×N`` index
    (one row selection per batch element).

    """
    idx = np.asarray(index, dtype=np.int64)
    rows = x.shape[-2] if x.ndim >= 2 else 0
    if idx.size and (idx.min() < 0 or idx.max() >= rows):
        raise DimensionError("gather", x.shape, idx.shape, detail="index out of range")
    if x.ndim == 2 and idx.ndim == 1:
        where: Tuple[np.ndarray, ...] = (idx,)
    elif x.ndim == 3 and idx.ndim == 2 and idx.shape[0] == x.shape[0]:
        where = (np.arange(x.shape[0])[:, None], idx)
    else:
        raise DimensionError("gather", x.shape, idx.shape)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        gx = np.zeros_like(x.data)
        np.add.at(gx, where, g)
        return (gx,)

    return _finish("gather", x.data[where], (x,), backward)


@register("concat")
def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join tensors along an existing axis."""
    if not tensors:
        raise DimensionError("concat", detail="nothing to concatenate")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError("concat", *(t.shape for t in tensors)) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray) -> List[np.ndarray]:
        return list(np.split(g, bounds, axis=axis))

    return _finish("concat", out, tuple(tensors), backward)


@register("stack")
def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join same-shaped tensors along a new axis."""
    if not tensors:
        raise DimensionError("stack", detail="nothing to stack")
    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError("stack", *(t.shape for t in tensors)) from None

    def backward(g: np.ndarray) -> List[np.ndarray]:
        return [np.take(g, i, axis=axis) for i in range(len(tensors))]

    return _finish("stack", out, tuple(tensors), backward)


@register("masked_fill")
def masked_fill(x: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where ``mask`` is true by ``value``; they get no gradient."""
    full_mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.where(full_mask, 0, g),)

    return _finish("masked_fill", np.where(full_mask, value, x.data), (x,), backward)


@register("cross_entropy")
def cross_entropy(logits: Tensor, target: Any, axis: int = -1) -> Tensor:
    """Cross-entropy against a soft target distribution, one value per row.

    ``target`` is constant and need not sum to one (zero rows give zero loss).

    """
    target_data = np.asarray(
        target.data if isinstance(target, Tensor) else target, dtype=logits.dtype
    )
    if target_data.shape != logits.shape:
        raise DimensionError("cross_entropy", logits.shape, target_data.shape)
    shifted = logits.data - np.max(logits.data, axis=axis, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    mass = target_data.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.expand_dims(g, axis) * (np.exp(log_probs) * mass - target_data),)

    return _finish(
        "cross_entropy", -(target_data * log_probs).sum(axis=axis), (logits,), backward
    )


@register("l2_normalize")
def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    """Scale to unit Euclidean norm along ``axis``."""
    norm = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True) + eps)
    out = x.data / norm

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return ((g - out * (g * out).sum(axis=axis, keepdims=True)) / norm,)

    return _finish("l2_normalize", out, (x,), backward)


@register("linear")
def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Affine map ``x @ weight + bias`` over the last axis of ``x``.

    ``weight`` is stored ``in×out``.

    """
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError("linear", x.shape, weight.shape)
    if bias is not None and bias.shape != (weight.shape[1],):
        raise DimensionError("linear", weight.shape, bias.shape)
    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data
    inputs: Tuple[Tensor, ...] = (x, weight) if bias is None else (x, weight, bias)

    def backward(g: np.ndarray) -> Tuple[np.ndarray, ...]:
        flat_x = x.data.reshape(-1, weight.shape[0])
        flat_g = g.reshape(-1, weight.shape[1])
        grads = (g @ weight.data.T, flat_x.T @ flat_g)
        if bias is None:
            return grads
        return (*grads, flat_g.sum(axis=0))

    return _finish("linear", out, inputs, backward)


def square(x: Tensor) -> Tensor:
    """Elementwise square."""
    return mul(x, x)


def total(tensors: Sequence[Tensor]) -> Tensor:
    """Left-to-right sum of tensors."""
    result = tensors[0]
    for tensor in tensors[1:]:
        result = add(result, tensor)
    return result

