"""Parameterized layers built from :mod:`wildground.autodiff.functional`."""
from __future__ import annotations

import logging
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    cast,
)

import numpy as np

from ..exceptions import (
    CheckpointMismatchError,
    ConfigurationError,
    UnknownTokenError,
)
from . import functional as F
from .tensor import Parameter, Tensor, default_dtype

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

MASK_VALUE = -1e9
"""Score given to masked attention keys before the softmax."""


class Module:
    """Base class of every layer.

    Parameters and sub-modules are discovered from instance attributes in
    assignment order, which makes :meth:`named_parameters` deterministic.

    """

    training: bool

    def __init__(self) -> None:
        """Instantiate class."""
        self.training = True

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        """Run :meth:`forward`."""
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        """Compute the layer output."""
        raise NotImplementedError

    def named_children(self) -> Iterator[Tuple[str, Module]]:
        """Direct sub-modules with their attribute names."""
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        """Every parameter of this module and its sub-modules.

        Args:
            prefix: Prepended to each dotted name.

        """
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        """Every parameter in :meth:`named_parameters` order."""
        return [param for _, param in self.named_parameters()]

    def modules(self) -> Iterator[Module]:
        """This module and every sub-module, depth first."""
        yield self
        for _, child in self.named_children():
            yield from child.modules()

    def num_parameters(self) -> int:
        """Total number of scalar parameters."""
        return sum(param.size for param in self.parameters())

    def train(self, mode: bool = True) -> Module:
        """Enable or disable training behaviour (dropout) recursively."""
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> Module:
        """Disable training behaviour recursively."""
        return self.train(False)

    def set_rng(self, rng: np.random.Generator) -> None:
        """Share ``rng`` with every dropout layer."""
        for module in self.modules():
            if isinstance(module, Dropout):
                module.rng = rng

    def zero_grad(self) -> None:
        """Drop every accumulated gradient."""
        for param in self.parameters():
            param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter by name."""
        return {name: param.numpy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Overwrite parameters from ``state``.

        Raises:
            CheckpointMismatchError: A parameter is missing from ``state`` or
                its stored shape differs.

        """
        for name, param in self.named_parameters():
            if name not in state:
                raise CheckpointMismatchError(name, param.shape, missing=True)
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise CheckpointMismatchError(name, param.shape, value.shape)
            param.assign(value.astype(param.dtype))


class ModuleList(Module):
    """Ordered container of sub-modules named by position."""

    def __init__(self, modules: Sequence[Module] = ()) -> None:
        """Instantiate class."""
        super().__init__()
        self._items: List[Module] = []
        for module in modules:
            self.append(module)

    def append(self, module: Module) -> None:
        """Add a module at the end."""
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __iter__(self) -> Iterator[Module]:
        """Iterate over the modules."""
        return iter(self._items)

    def __len__(self) -> int:
        """Number of modules."""
        return len(self._items)

    def __getitem__(self, index: int) -> Module:
        """Module at ``index``."""
        return self._items[index]


def uniform_init(
    rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int
) -> np.ndarray:
    """Uniform values in ``±1/sqrt(fan_in)``."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """Affine layer with ``in×out`` weight storage."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        *,
        bias: bool = True,
    ) -> None:
        """Instantiate class.

        Args:
            in_features: Width of the input.
            out_features: Width of the output.
            rng: Source of the initial weights.
            bias: Whether to add a learned offset.

        """
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(
            uniform_init(rng, (in_features, out_features), in_features)
        )
        self.bias = (
            Parameter(uniform_init(rng, (out_features,), in_features)) if bias else None
        )

    def forward(self, x: Tensor) -> Tensor:
        """Apply the affine map to the last axis."""
        return F.linear(x, self.weight, self.bias)


class LayerNorm(Module):
    """Layer normalization over the last axis."""

    def __init__(self, dim: int, eps: float = 1e-5) -> None:
        """Instantiate class."""
        super().__init__()
        self.eps = eps
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        """Normalize ``x``."""
        return F.layer_norm(x, self.gain, self.bias, self.eps)


class Dropout(Module):
    """Inverted dropout driven by a shared generator."""

    def __init__(self, rate: float, rng: Optional[np.random.Generator] = None) -> None:
        """Instantiate class."""
        super().__init__()
        if not 0 <= rate < 1:
            raise ConfigurationError(f"dropout rate {rate} is outside [0, 1)")
        self.rate = rate
        self.rng = rng or np.random.default_rng(0)

    def forward(self, x: Tensor) -> Tensor:
        """Drop activations in training mode; identity otherwise."""
        return F.dropout(x, self.rate, self.rng, training=self.training)


class FeedForward(Module):
    """``linear → ReLU → dropout → linear``."""

    def __init__(
        self, dim: int, hidden_dim: int, dropout: float, rng: np.random.Generator
    ) -> None:
        """Instantiate class."""
        super().__init__()
        self.fc1 = Linear(dim, hidden_dim, rng)
        self.dropout = Dropout(dropout, rng)
        self.fc2 = Linear(hidden_dim, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        """Transform each token independently."""
        return self.fc2(self.dropout(F.relu(self.fc1(x))))


class MultiHeadAttention(Module):
    """Scaled dot-product attention with per-head split and output projection.

    Inputs are ``B×N×C`` or unbatched ``N×C``. The weights of the most recent
    call are kept in :attr:`last_weights` (``B×H×Nq×Nk``) for inspection.

    """

    last_weights: Optional[np.ndarray]

    def __init__(self, dim: int, heads: int, rng: np.random.Generator) -> None:
        """Instantiate class.

        Raises:
            ConfigurationError: ``dim`` is not divisible by ``heads``.

        """
        super().__init__()
        if heads <= 0 or dim % heads:
            raise ConfigurationError(
                f"feature dim {dim} is not divisible by {heads} attention heads"
            )
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.q_proj = Linear(dim, dim, rng)
        self.k_proj = Linear(dim, dim, rng)
        self.v_proj = Linear(dim, dim, rng)
        self.out_proj = Linear(dim, dim, rng)
        self.last_weights = None

    def _split(self, x: Tensor) -> Tensor:
        batch, tokens, _ = x.shape
        return F.transpose(
            F.reshape(x, (batch, tokens, self.heads, self.head_dim)), (0, 2, 1, 3)
        )

    def forward(
        self,
        query: Tensor,
        key: Tensor,
        value: Tensor,
        key_mask: Optional[np.ndarray] = None,
    ) -> Tensor:
        """Attend from ``query`` tokens to ``key``/``value`` tokens.

        Args:
            query: ``B×Nq×C`` queries.
            key: ``B×Nk×C`` keys.
            value: ``B×Nk×C`` values.
            key_mask: ``B×Nk`` booleans, true for keys that may be attended.

        """
        unbatched = query.ndim == 2
        if unbatched:
            query = F.reshape(query, (1, *query.shape))
            key = F.reshape(key, (1, *key.shape))
            value = F.reshape(value, (1, *value.shape))
            if key_mask is not None:
                key_mask = np.asarray(key_mask)[None]
        batch, n_query, _ = query.shape
        q = self._split(self.q_proj(query))
        k = self._split(self.k_proj(key))
        v = self._split(self.v_proj(value))
        scores = F.div(F.matmul(q, F.transpose(k)), float(np.sqrt(self.head_dim)))
        if key_mask is not None:
            blocked = ~np.asarray(key_mask, dtype=bool)[:, None, None, :]
            scores = F.masked_fill(scores, blocked, MASK_VALUE)
        weights = F.softmax(scores, axis=-1)
        self.last_weights = weights.data
        mixed = F.transpose(F.matmul(weights, v), (0, 2, 1, 3))
        out = self.out_proj(F.reshape(mixed, (batch, n_query, self.dim)))
        if unbatched:
            out = F.reshape(out, out.shape[1:])
        return out


class AttentionBlock(Module):
    """Attention sublayer with residual, then feed-forward with residual and norm.

    ``A = ATT(x, y, y) + x`` followed by ``LN(FFN(A) + A)``.

    """

    def __init__(
        self,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        rng: np.random.Generator,
    ) -> None:
        """Instantiate class."""
        super().__init__()
        self.attention = MultiHeadAttention(dim, heads, rng)
        self.ffn = FeedForward(dim, ffn_dim, dropout, rng)
        self.norm = LayerNorm(dim)

    def forward(
        self,
        x: Tensor,
        context: Optional[Tensor] = None,
        *,
        key_mask: Optional[np.ndarray] = None,
        key_pos: Optional[Tensor] = None,
    ) -> Tensor:
        """Attend from ``x`` to ``context`` (``x`` itself when omitted).

        Args:
            x: Query tokens.
            context: Key/value tokens.
            key_mask: Valid-key mask for ``context``.
            key_pos: Positional embedding added to keys and values only.

        """
        memory = x if context is None else context
        if key_pos is not None:
            memory = F.add(memory, key_pos)
        attended = F.add(self.attention(x, memory, memory, key_mask), x)
        return self.norm(F.add(self.ffn(attended), attended))


class Embedding(Module):
    """Lookup table of token vectors."""

    def __init__(self, num_embeddings: int, dim: int, rng: np.random.Generator) -> None:
        """Instantiate class."""
        super().__init__()
        self.num_embeddings = num_embeddings
        self.weight = Parameter(rng.standard_normal((num_embeddings, dim)))

    def forward(self, ids: np.ndarray) -> Tensor:
        """Rows of the table for integer ``ids`` of any shape.

        Raises:
            UnknownTokenError: An id is negative or past the vocabulary.

        """
        ids = np.asarray(ids, dtype=np.int64)
        bad = ids[(ids < 0) | (ids >= self.num_embeddings)]
        if bad.size:
            raise UnknownTokenError(int(bad.reshape(-1)[0]))
        return F.getitem(self.weight, ids)


class MLP(Module):
    """Stack of linear layers with ReLU between them (none after the last)."""

    def __init__(self, dims: Sequence[int], rng: np.random.Generator) -> None:
        """Instantiate class.

        Args:
            dims: Input width followed by the width of every layer.

        """
        super().__init__()
        if len(dims) < 2:
            raise ConfigurationError("an MLP needs an input and at least one layer")
        self.layers = ModuleList(
            [Linear(d_in, d_out, rng) for d_in, d_out in zip(dims[:-1], dims[1:])]
        )

    def forward(self, x: Tensor) -> Tensor:
        """Apply every layer."""
        for index, layer in enumerate(self.layers):
            x = layer(x)
            if index < len(self.layers) - 1:
                x = F.relu(x)
        return x


def zeros(*shape: int) -> Tensor:
    """Constant zero tensor in the current precision."""
    return Tensor.wrap(np.zeros(shape, dtype=default_dtype()))
