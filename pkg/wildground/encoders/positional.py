"""Fixed positional embeddings.

All three kinds are pure functions of position; none has parameters.

"""
from __future__ import annotations

from typing import Union

import numpy as np
from typing_extensions import Literal

from ..autodiff import Tensor
from ..constants import PERCEPTION_RADIUS
from ..exceptions import ConfigurationError

PositionalKind = Literal["sine1d", "sine2d", "fourier3d"]

BASE_PERIOD = 10000.0
FOURIER_MAX_SCALE = 64.0
"""Highest fourier3d frequency as a multiple of the lowest (pi)."""


def _require(dim: int, multiple: int, kind: str) -> None:
    if dim <= 0 or dim % multiple:
        raise ConfigurationError(
            f"{kind} embedding width must be a positive multiple of {multiple}, "
            f"got {dim}"
        )


def sine1d(positions: Union[np.ndarray, int], dim: int) -> np.ndarray:
    """Interleaved sine/cosine of integer positions.

    Even channels hold ``sin(p / 10000^(2i/dim))``, odd channels the cosine,
    so position 0 reads ``[0, 1, 0, 1, ...]``.

    Returns:
        ``(*positions.shape, dim)`` array.

    """
    _require(dim, 2, "sine1d")
    pos = np.asarray(positions, dtype=np.float64)
    rates = BASE_PERIOD ** (-np.arange(0, dim, 2, dtype=np.float64) / dim)
    angles = pos[..., None] * rates
    out = np.empty((*pos.shape, dim))
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


def sine2d(height: int, width: int, dim: int) -> np.ndarray:
    """Row embedding in the first half of the channels, column in the second.

    Returns:
        ``(height*width)×dim`` array in row-major grid order.

    """
    _require(dim, 4, "sine2d")
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    half = dim // 2
    return np.concatenate(
        [sine1d(rows.reshape(-1), half), sine1d(cols.reshape(-1), half)], axis=-1
    )


def fourier3d(xyz: np.ndarray, dim: int) -> np.ndarray:
    """Sine/cosine of seed coordinates at log-spaced frequencies.

    Coordinates are divided by the perception radius first; frequencies run
    from pi to ``64 pi`` with ``dim / 6`` steps per axis.

    Returns:
        ``(*xyz.shape[:-1], dim)`` array laid out as ``[sin x, cos x, sin y, ...]``
        blocks.

    """
    _require(dim, 6, "fourier3d")
    coords = np.asarray(xyz, dtype=np.float64) / PERCEPTION_RADIUS
    freqs = np.pi * np.geomspace(1.0, FOURIER_MAX_SCALE, dim // 6)
    blocks = []
    for axis in range(3):
        angles = coords[..., axis, None] * freqs
        blocks.extend([np.sin(angles), np.cos(angles)])
    return np.concatenate(blocks, axis=-1)


def positional(kind: PositionalKind, positions: np.ndarray, dim: int) -> Tensor:
    """Embedding of ``positions`` as a constant tensor.

    Args:
        kind: ``sine1d`` takes integer indices, ``sine2d`` a ``(height, width)``
            grid shape, ``fourier3d`` coordinates with a trailing axis of 3.
        positions: See ``kind``.
        dim: Embedding width.

    """
    if kind == "sine1d":
        return Tensor(sine1d(positions, dim))
    if kind == "sine2d":
        height, width = (int(v) for v in np.asarray(positions).reshape(-1)[:2])
        return Tensor(sine2d(height, width, dim))
    if kind == "fourier3d":
        return Tensor(fourier3d(positions, dim))
    raise ConfigurationError(f"unknown positional embedding {kind!r}")
