"""Query decoder."""
from __future__ import annotations

from typing import TYPE_CHECKING, Optional

import numpy as np

from ..autodiff import Tensor, functional as F
from ..autodiff.nn import FeedForward, LayerNorm, Module, ModuleList, MultiHeadAttention

if TYPE_CHECKING:
    from ..type_defs import DecoderOrder


class _Sublayer(Module):
    """Attention with residual and norm: ``LN(ATT(x, y, y) + x)``."""

    def __init__(self, dim: int, heads: int, rng: np.random.Generator) -> None:
        super().__init__()
        self.attention = MultiHeadAttention(dim, heads, rng)
        self.norm = LayerNorm(dim)

    def forward(
        self, x: Tensor, memory: Tensor, key_mask: Optional[np.ndarray] = None
    ) -> Tensor:
        return self.norm(F.add(self.attention(x, memory, memory, key_mask), x))


class DecoderLayer(Module):
    """Query self-attention, cross-attention to words and to visual tokens, FFN."""

    def __init__(
        self,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        order: DecoderOrder,
        rng: np.random.Generator,
    ) -> None:
        """Instantiate class."""
        super().__init__()
        self.order = order
        self.self_attention = _Sublayer(dim, heads, rng)
        self.text_attention = _Sublayer(dim, heads, rng)
        self.visual_attention = _Sublayer(dim, heads, rng)
        self.ffn = FeedForward(dim, ffn_dim, dropout, rng)
        self.norm = LayerNorm(dim)

    def forward(
        self, queries: Tensor, visual: Tensor, text: Tensor, text_mask: np.ndarray
    ) -> Tensor:
        """Refine ``B×N×C`` queries."""
        x = self.self_attention(queries, queries)
        if self.order == "language_first":
            x = self.text_attention(x, text, text_mask)
            x = self.visual_attention(x, visual)
        else:
            x = self.visual_attention(x, visual)
            x = self.text_attention(x, text, text_mask)
        return self.norm(F.add(self.ffn(x), x))


class GroundingDecoder(Module):
    """Stack of :class:`DecoderLayer`."""

    def __init__(
        self,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        layers: int,
        order: DecoderOrder,
        rng: np.random.Generator,
    ) -> None:
        """Instantiate class."""
        super().__init__()
        self.layers = ModuleList(
            [
                DecoderLayer(dim, heads, ffn_dim, dropout, order, rng)
                for _ in range(layers)
            ]
        )

    def forward(
        self, queries: Tensor, visual: Tensor, text: Tensor, text_mask: np.ndarray
    ) -> Tensor:
        """Run every layer."""
        for layer in self.layers:
            queries = layer(queries, visual, text, text_mask)
        return queries
