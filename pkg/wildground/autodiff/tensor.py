"""Tensor values and the operation tape."""
from __future__ import annotations

import contextvars
import itertools
import logging
from contextlib import contextmanager
from typing import (
    TYPE_CHECKING,
    Any,
    Callable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
    cast,
)

import numpy as np

from ..exceptions import TapeError

if TYPE_CHECKING:
    from types import TracebackType

    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
"""Maps the gradient of an op output to the gradients of its inputs."""

_DTYPE: contextvars.ContextVar[np.dtype] = contextvars.ContextVar(
    "wildground_dtype", default=np.dtype(np.float64)
)
_ACTIVE_TAPE: contextvars.ContextVar[Optional[Tape]] = contextvars.ContextVar(
    "wildground_tape", default=None
)
_TAPE_SERIALS = itertools.count(1)


def default_dtype() -> np.dtype:
    """Floating point type used for new tensors in the current context."""
    return _DTYPE.get()


@contextmanager
def precision(dtype: Union[str, np.dtype, type]) -> Iterator[np.dtype]:
    """Create new tensors with ``dtype`` within the context.

    Args:
        dtype: ``float32`` or ``float64``.

    """
    resolved = np.dtype(dtype)
    if resolved not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported tensor dtype {resolved}")
    token = _DTYPE.set(resolved)
    try:
        yield resolved
    finally:
        _DTYPE.reset(token)


def current_tape() -> Optional[Tape]:
    """Tape recording in the current context, if any."""
    return _ACTIVE_TAPE.get()


class Tensor:
    """Dense n-dimensional float array that may participate in a tape.

    Tensors are values: ops never modify their inputs. A tensor created by an
    op while a :class:`Tape` is active and any input requires a gradient is
    recorded on that tape.

    """

    __array_priority__ = 100

    data: np.ndarray
    """Values in row-major order."""

    grad: Optional[np.ndarray]
    """Accumulated gradient. Allocated on first accumulation and only for
    tensors that require one."""

    requires_grad: bool

    def __init__(
        self,
        data: Any,
        *,
        requires_grad: bool = False,
        dtype: Optional[Union[str, np.dtype, type]] = None,
    ) -> None:
        """Instantiate class.

        Args:
            data: Array-like values.
            requires_grad: Whether backward passes accumulate into ``grad``.
            dtype: Storage type (default from :func:`precision`).

        """
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.array(data, dtype=dtype or default_dtype(), copy=True)
        self.requires_grad = requires_grad
        self.grad = None

    @classmethod
    def wrap(cls, data: np.ndarray, *, requires_grad: bool = False) -> Tensor:
        """Build a tensor around ``data`` without copying (used by ops)."""
        obj = cls.__new__(cls)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(default_dtype())
        obj.data = data
        obj.requires_grad = requires_grad
        obj.grad = None
        return obj

    @property
    def shape(self) -> Tuple[int, ...]:
        """Extents of each axis."""
        return cast(Tuple[int, ...], self.data.shape)

    @property
    def ndim(self) -> int:
        """Number of axes."""
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        """Storage type."""
        return self.data.dtype

    @property
    def size(self) -> int:
        """Number of elements."""
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """Copy of the values."""
        return self.data.copy()

    def item(self) -> float:
        """Value of a single-element tensor."""
        return float(self.data.item())

    def detach(self) -> Tensor:
        """Same values, never recorded."""
        return Tensor.wrap(self.data)

    def accumulate_grad(self, grad: np.ndarray) -> None:
        """Add ``grad`` to the accumulator."""
        grad = np.asarray(grad, dtype=self.data.dtype)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None

    def __repr__(self) -> str:
        """Return object representation."""
        return (
            f"{self.__class__.__name__}(shape={self.shape}, dtype={self.dtype}, "
            f"requires_grad={self.requires_grad})"
        )

    def __len__(self) -> int:
        """Extent of the first axis."""
        return len(self.data)

    # operator sugar; the functional module holds the implementations
    def __add__(self, other: Any) -> Tensor:
        return functional.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return functional.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return functional.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return functional.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return functional.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return functional.mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return functional.div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return functional.div(other, self)

    def __neg__(self) -> Tensor:
        return functional.neg(self)

    def __matmul__(self, other: Any) -> Tensor:
        return functional.matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        return functional.getitem(self, index)

    def sum(self, axis: Any = None, keepdims: bool = False) -> Tensor:
        """Sum over ``axis``."""
        return functional.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> Tensor:
        """Mean over ``axis``."""
        return functional.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: Any) -> Tensor:
        """View with a new shape."""
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return functional.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        """Permute axes (default swaps the last two)."""
        return functional.transpose(self, axes or None)

    def exp(self) -> Tensor:
        """Elementwise exponential."""
        return functional.exp(self)

    def log(self) -> Tensor:
        """Elementwise natural logarithm."""
        return functional.log(self)


class Parameter(Tensor):
    """Trainable tensor registered on a module."""

    def __init__(self, data: Any, *, dtype: Optional[Any] = None) -> None:
        """Instantiate class."""
        super().__init__(data, requires_grad=True, dtype=dtype)

    @property
    def has_grad(self) -> bool:
        """Whether a backward pass reached this parameter."""
        return self.grad is not None

    def assign(self, value: np.ndarray) -> None:
        """Overwrite the values in place; the shape must not change."""
        value = np.asarray(value)
        if value.shape != self.data.shape:
            raise ValueError(
                f"cannot assign shape {value.shape} to parameter of shape "
                f"{self.data.shape}"
            )
        self.data[...] = value


class TapeNode:
    """One recorded operation."""

    __slots__ = ("op", "inputs", "output", "backward_fn", "visits")

    def __init__(
        self,
        op: str,
        inputs: Sequence[Tensor],
        output: Tensor,
        backward_fn: BackwardFn,
    ) -> None:
        """Instantiate class."""
        self.op = op
        self.inputs = tuple(inputs)
        self.output = output
        self.backward_fn = backward_fn
        self.visits = 0


class Tape:
    """Ordered record of operations for one forward/backward pass.

    Nodes are appended in creation order. An op's inputs always exist before
    its output, so creation order is a topological order and the reverse walk
    in :meth:`backward` needs no sorting.

    Example:
        .. code-block:: python

            with Tape() as tape:
                loss = model(batch)
            tape.backward(loss)

    """

    def __init__(self) -> None:
        """Instantiate class."""
        self.nodes: List[TapeNode] = []
        self.consumed = False
        self.serial = next(_TAPE_SERIALS)
        self._token: Optional[contextvars.Token[Optional[Tape]]] = None

    def __enter__(self) -> Tape:
        """Start recording in the current context."""
        if self._token is not None:
            raise TapeError("tape is already active")
        if self.consumed:
            raise TapeError("tape was already used for a backward pass")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(
        self,
        exc_type: Optional[type],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        """Stop recording."""
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        """Number of recorded nodes."""
        return len(self.nodes)

    def record(
        self,
        op: str,
        inputs: Sequence[Tensor],
        output: Tensor,
        backward_fn: BackwardFn,
    ) -> TapeNode:
        """Append an operation."""
        if self.consumed:
            raise TapeError("cannot record on a consumed tape")
        node = TapeNode(op, inputs, output, backward_fn)
        self.nodes.append(node)
        setattr(output, "_tape_serial", self.serial)
        return node

    def backward(self, root: Tensor, grad: Optional[np.ndarray] = None) -> None:
        """Propagate gradients from ``root`` into every leaf that requires one.

        Args:
            root: Output to differentiate. Must be a scalar unless ``grad``
                is given.
            grad: Gradient of some objective with respect to ``root``.

        Raises:
            TapeError: The tape was already consumed, ``root`` is not scalar
                and no ``grad`` was given, or a node would be visited twice.

        """
        if self.consumed:
            raise TapeError("tape was already used for a backward pass")
        if self._token is not None:
            raise TapeError("backward must run after the recording context exits")
        if grad is None:
            if root.size != 1:
                raise TapeError(
                    f"backward from non-scalar tensor of shape {root.shape}"
                )
            grad = np.ones_like(root.data)
        self.consumed = True
        grads = {id(root): np.asarray(grad, dtype=root.dtype)}
        if not self._is_recorded(root):
            if root.requires_grad:
                root.accumulate_grad(grads[id(root)])
            return
        for node in reversed(self.nodes):
            out_grad = grads.pop(id(node.output), None)
            if out_grad is None:
                continue
            node.visits += 1
            if node.visits > 1:
                raise TapeError(f"node {node.op} visited twice")
            input_grads = node.backward_fn(out_grad)
            for tensor, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                if input_grad.shape != tensor.shape:
                    raise TapeError(
                        f"{node.op} returned gradient of shape {input_grad.shape} "
                        f"for input of shape {tensor.shape}"
                    )
                if isinstance(tensor, Parameter) or not self._is_recorded(tensor):
                    tensor.accumulate_grad(input_grad)
                else:
                    key = id(tensor)
                    if key in grads:
                        grads[key] = grads[key] + input_grad
                    else:
                        grads[key] = input_grad
        LOGGER.debug("backward pass over %d nodes", len(self.nodes))

    def _is_recorded(self, tensor: Tensor) -> bool:
        return getattr(tensor, "_tape_serial", None) == self.serial

    @property
    def visit_counts(self) -> List[int]:
        """Visit counter of each node in creation order."""
        return [node.visits for node in self.nodes]


# pylint: disable=wrong-import-position,cyclic-import
from . import functional  # noqa: E402
