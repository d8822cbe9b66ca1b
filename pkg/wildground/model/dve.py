"""Dynamic visual encoder."""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from ..autodiff import Tensor
from ..autodiff.nn import AttentionBlock, Module, ModuleList
from ..exceptions import ConfigurationError, DimensionError


class FrameTokens(NamedTuple):
    """Tokens of an earlier frame with the positional embedding of their positions."""

    tokens: Tensor
    positions: Tensor


class DynamicVisualEncoder(Module):
    """Spatial self-attention on the current frame, then attention to earlier frames.

    Every layer runs one self-attention block over the current tokens and
    then, for each earlier frame from the most recent backwards,
    ``A = ATT(F_t, F_p + P_p, F_p + P_p) + F_t`` followed by
    ``LN(FFN(A) + A)``. With one frame only the spatial blocks run.

    """

    def __init__(
        self,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        layers: int,
        rng: np.random.Generator,
        *,
        temporal: bool = True,
    ) -> None:
        """Instantiate class.

        Args:
            dim: Token width.
            heads: Attention heads.
            ffn_dim: Hidden width of the feed-forward sublayers.
            dropout: Dropout rate inside the feed-forward sublayers.
            layers: Number of spatial (and temporal) blocks.
            rng: Source of initial weights.
            temporal: Build the blocks attending to earlier frames. Without
                them only single-frame input is accepted.

        """
        super().__init__()
        self.dim = dim
        self.spatial = ModuleList(
            [AttentionBlock(dim, heads, ffn_dim, dropout, rng) for _ in range(layers)]
        )
        self.temporal = ModuleList(
            [
                AttentionBlock(dim, heads, ffn_dim, dropout, rng)
                for _ in range(layers if temporal else 0)
            ]
        )

    def forward(self, current: Tensor, previous: Sequence[FrameTokens] = ()) -> Tensor:
        """Enhance ``B×T×C`` current-frame tokens.

        Args:
            current: Tokens of the newest frame.
            previous: Earlier frames, oldest first.

        Raises:
            ConfigurationError: Earlier frames given to an encoder built
                without temporal blocks.
            DimensionError: An earlier frame disagrees in batch or width.

        """
        if previous and not len(self.temporal):
            raise ConfigurationError(
                "dynamic visual encoder was built for a single frame"
            )
        for frame in previous:
            if (
                frame.tokens.shape[0] != current.shape[0]
                or frame.tokens.shape[-1] != current.shape[-1]
                or frame.positions.shape[-1] != current.shape[-1]
            ):
                raise DimensionError(
                    "dynamic_visual_encode", current.shape, frame.tokens.shape
                )
        x = current
        for index, spatial in enumerate(self.spatial):
            x = spatial(x)
            for frame in reversed(previous):
                x = self.temporal[index](x, frame.tokens, key_pos=frame.positions)
        return x
