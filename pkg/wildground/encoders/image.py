"""Patch-attention image encoder."""
from __future__ import annotations

from typing import NamedTuple, Tuple

import numpy as np

from ..autodiff import Tensor, functional as F
from ..autodiff.nn import AttentionBlock, Linear, Module, ModuleList
from ..exceptions import DimensionError
from .positional import sine2d


def patchify(images: np.ndarray, patch: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Cut ``B×H×W×3`` images into flattened non-overlapping patches.

    Returns:
        ``B×G×(patch*patch*3)`` patches in row-major grid order and the grid
        shape.

    Raises:
        DimensionError: Height or width is not a multiple of ``patch``.

    """
    if images.ndim != 4 or images.shape[-1] != 3:
        raise DimensionError("patchify", images.shape, detail="expected B×H×W×3")
    batch, height, width, _ = images.shape
    if height % patch or width % patch:
        raise DimensionError(
            "patchify", images.shape, detail=f"not a multiple of patch size {patch}"
        )
    rows, cols = height // patch, width // patch
    grid = images.reshape(batch, rows, patch, cols, patch, 3)
    grid = grid.transpose(0, 1, 3, 2, 4, 5)
    return grid.reshape(batch, rows * cols, patch * patch * 3), (rows, cols)


class ImageGridFeatures(NamedTuple):
    """Encoded images of a batch."""

    tokens: Tensor
    """``B×G×C`` patch features with positions added."""

    grid_shape: Tuple[int, int]


class ImageEncoder(Module):
    """Linear patch embedding, self-attention blocks, then ``sine2d`` positions."""

    def __init__(
        self,
        patch_size: int,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        layers: int,
        rng: np.random.Generator,
    ) -> None:
        """Instantiate class."""
        super().__init__()
        self.patch_size = patch_size
        self.dim = dim
        self.patch_embed = Linear(patch_size * patch_size * 3, dim, rng)
        self.blocks = ModuleList(
            [AttentionBlock(dim, heads, ffn_dim, dropout, rng) for _ in range(layers)]
        )

    def forward(self, images: np.ndarray) -> ImageGridFeatures:
        """Encode ``B×H×W×3`` images with values in ``[0, 1]``."""
        patches, grid = patchify(np.asarray(images), self.patch_size)
        x = self.patch_embed(Tensor(patches))
        for block in self.blocks:
            x = block(x)
        x = F.add(x, Tensor(sine2d(*grid, self.dim)))
        return ImageGridFeatures(x, grid)
