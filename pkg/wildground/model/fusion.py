"""Triple-modal feature interaction between points, images and language."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Optional, Tuple, cast

import numpy as np

from ..autodiff import Tensor, functional as F
from ..autodiff.nn import MLP, AttentionBlock, Module, ModuleList
from ..pointnet.cloud import bev_pixel

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..type_defs import FusionOrder

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


def seed_patch_index(positions: np.ndarray, grid_shape: Tuple[int, int]) -> np.ndarray:
    """Image grid cell under every seed of a ``B×S×3`` position array."""
    rows, cols = grid_shape
    batch, seeds, _ = positions.shape
    fraction = bev_pixel(positions.reshape(-1, 3)[:, :2], 1)
    row = np.clip(np.floor(fraction[:, 0] * rows).astype(np.int64), 0, rows - 1)
    col = np.clip(np.floor(fraction[:, 1] * cols).astype(np.int64), 0, cols - 1)
    return (row * cols + col).reshape(batch, seeds)


class TripleModalInteraction(Module):
    """Paired visual-language cross-attention, then image fusion.

    ``fusion`` selects the wiring:

    ``ours``
        Points and words attend each other for ``layers`` rounds; the
        semantic-enhanced points then attend the image tokens.
    ``vision_first``
        Points attend the image tokens first, then interact with words.
    ``image_dominant``
        Image tokens interact with words; points then attend the
        language-enhanced image tokens.
    ``concat``
        Points interact with words; each point feature is concatenated with
        the image token under it and mixed by an MLP.

    Without image tokens every variant reduces to the paired interaction.

    """

    def __init__(
        self,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        layers: int,
        fusion: FusionOrder,
        rng: np.random.Generator,
        *,
        images: bool = True,
    ) -> None:
        """Instantiate class.

        Args:
            dim: Token width.
            heads: Attention heads.
            ffn_dim: Hidden width of the feed-forward sublayers.
            dropout: Dropout rate inside the feed-forward sublayers.
            layers: Paired interaction rounds.
            fusion: Wiring of the image tokens.
            rng: Source of initial weights.
            images: Build the image fusion layers.

        """
        super().__init__()
        self.fusion = fusion
        self.visual_to_text = ModuleList(
            [AttentionBlock(dim, heads, ffn_dim, dropout, rng) for _ in range(layers)]
        )
        self.text_to_visual = ModuleList(
            [AttentionBlock(dim, heads, ffn_dim, dropout, rng) for _ in range(layers)]
        )
        if images and fusion == "concat":
            self.image_mix = MLP([2 * dim, dim, dim], rng)
        elif images:
            self.image_attention = AttentionBlock(dim, heads, ffn_dim, dropout, rng)

    def interact(
        self, visual: Tensor, text: Tensor, text_mask: np.ndarray
    ) -> Tuple[Tensor, Tensor]:
        """Paired cross-attention rounds.

        Returns:
            Language-enhanced visual tokens and visual-enhanced word tokens.

        """
        for to_text, to_visual in zip(self.visual_to_text, self.text_to_visual):
            visual, text = (
                to_text(visual, text, key_mask=text_mask),
                to_visual(text, visual),
            )
        return visual, text

    def forward(
        self,
        points: Tensor,
        text: Tensor,
        text_mask: np.ndarray,
        images: Optional[Tensor] = None,
        seed_positions: Optional[np.ndarray] = None,
        grid_shape: Optional[Tuple[int, int]] = None,
    ) -> Tuple[Tensor, Tensor]:
        """Fuse the three modalities.

        Args:
            points: ``B×S×C`` point tokens.
            text: ``B×M×C`` word tokens.
            text_mask: ``B×M`` valid-word mask.
            images: ``B×G×C`` image tokens, if the model sees images.
            seed_positions: ``B×S×3`` seed positions (``concat`` only).
            grid_shape: Image token grid (``concat`` only).

        Returns:
            Comprehensive visual features ``F_V`` and visual-enhanced word
            features ``F_Lv``.

        """
        if images is None:
            return self.interact(points, text, text_mask)
        if self.fusion == "vision_first":
            points = self.image_attention(points, images)
            return self.interact(points, text, text_mask)
        if self.fusion == "image_dominant":
            images, text = self.interact(images, text, text_mask)
            return self.image_attention(points, images), text
        points, text = self.interact(points, text, text_mask)
        if self.fusion == "concat":
            if seed_positions is None or grid_shape is None:
                raise ValueError("concat fusion needs seed positions and a grid shape")
            under = F.gather(images, seed_patch_index(seed_positions, grid_shape))
            return self.image_mix(F.concat([points, under], axis=-1)), text
        return self.image_attention(points, images), text
