"""The grounding network."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Hashable, List, NamedTuple, Optional, Tuple, cast

import numpy as np

from ..autodiff import Parameter, Tensor, functional as F
from ..autodiff.nn import Linear, Module
from ..autodiff.optim import ParamGroup
from ..encoders.image import ImageEncoder, ImageGridFeatures
from ..encoders.positional import fourier3d, sine2d
from ..encoders.text import TextEncoder
from ..exceptions import ConfigurationError
from ..pointnet.cloud import PointCloud
from ..pointnet.encoder import PointEncoder, SeedSet
from .decoder import GroundingDecoder
from .dve import DynamicVisualEncoder, FrameTokens
from .fusion import TripleModalInteraction
from .heads import GroundingHeads, Predictions, select_queries

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..models.config import ModelConfig
    from ..type_defs import Span

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


class ModelInput(NamedTuple):
    """One batch of scenes as the network consumes it."""

    clouds: List[List[PointCloud]]
    """Per scene, its frames oldest first."""

    images: np.ndarray
    """``B×K×H×W×3`` uint8 renders matching :attr:`clouds`."""

    ids: np.ndarray
    """``B×M`` padded token ids."""

    mask: np.ndarray
    """``B×M`` valid-word mask."""

    spans: List[List[Span]]
    keys: List[str]
    """Scene ids, used to cache point sampling."""

    @property
    def batch_size(self) -> int:
        """Number of scenes."""
        return len(self.clouds)


def nearest_seed(current: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Index of the closest ``B×S'×3`` previous seed for ``B×S×3`` current seeds."""
    sq = np.sum((current[:, :, None, :] - previous[:, None, :, :]) ** 2, axis=-1)
    return np.argmin(sq, axis=-1)


class GroundingModel(Module):
    """Point, image and text encoders, dynamic visual encoder, fusion and decoder."""

    def __init__(
        self, config: ModelConfig, vocab_size: int, rng: np.random.Generator
    ) -> None:
        """Instantiate class.

        Args:
            config: Hyperparameters and variant switches.
            vocab_size: Number of token ids including ``not-mentioned``.
            rng: Source of initial weights.

        """
        super().__init__()
        self.config = config
        cfg = config
        dim, heads, ffn_dim, dropout = cfg.dim, cfg.heads, cfg.ffn_dim, cfg.dropout
        self.point_encoder = PointEncoder(
            cfg.point_encoder, 4 if cfg.paint_points else 1, rng
        )
        self.text_encoder = TextEncoder(
            vocab_size, dim, heads, ffn_dim, dropout, cfg.text_layers, rng
        )
        if cfg.use_images:
            self.image_encoder = ImageEncoder(
                cfg.patch_size, dim, heads, ffn_dim, dropout, cfg.image_layers, rng
            )
        if cfg.use_dve:
            temporal = cfg.temporal == "dve" and cfg.frames > 1
            self.point_dve = DynamicVisualEncoder(
                dim, heads, ffn_dim, dropout, cfg.dve_layers, rng, temporal=temporal
            )
            if cfg.use_images and not cfg.share_dve:
                self.image_dve = DynamicVisualEncoder(
                    dim, heads, ffn_dim, dropout, cfg.dve_layers, rng, temporal=temporal
                )
        if cfg.temporal == "feature_concat" and cfg.frames > 1:
            self.temporal_mix = Linear(cfg.frames * dim, dim, rng)
        self.interaction = TripleModalInteraction(
            dim,
            heads,
            ffn_dim,
            dropout,
            cfg.tfi_layers,
            cfg.fusion,
            rng,
            images=cfg.use_images,
        )
        self.decoder = GroundingDecoder(
            dim, heads, ffn_dim, dropout, cfg.decoder_layers, cfg.decoder_order, rng
        )
        self.heads = GroundingHeads(dim, cfg.proj_dim, rng)
        LOGGER.debug("built model with %d parameters", self.num_parameters())

    def param_groups(self, lr: float, point_lr: float) -> List[ParamGroup]:
        """Point encoder parameters at ``point_lr``, everything else at ``lr``."""
        point: List[Tuple[str, Parameter]] = []
        rest: List[Tuple[str, Parameter]] = []
        for name, param in self.named_parameters():
            (point if name.startswith("point_encoder.") else rest).append((name, param))
        return [ParamGroup(point, point_lr), ParamGroup(rest, lr)]

    def _frames(self, inputs: ModelInput) -> List[List[PointCloud]]:
        frames = self.config.frames
        result = []
        for scene, key in zip(inputs.clouds, inputs.keys):
            if len(scene) < frames:
                raise ConfigurationError(
                    f"scene {key} has {len(scene)} frames; the model needs {frames}"
                )
            result.append(scene[-frames:])
        return result

    def _encode_points(
        self, clouds: List[PointCloud], keys: List[Hashable]
    ) -> Tuple[np.ndarray, Tensor]:
        seeds: SeedSet = self.point_encoder(clouds, keys)
        positions = Tensor(fourier3d(seeds.positions, self.config.dim))
        return seeds.positions, F.add(seeds.features, positions)

    def encode_points(
        self, inputs: ModelInput
    ) -> Tuple[np.ndarray, Tensor, List[FrameTokens]]:
        """Seed positions and features of the newest frame, plus earlier frames.

        Earlier frames are returned only for the ``dve`` temporal mode; the
        other modes fold them in here.

        """
        cfg = self.config
        frames = self._frames(inputs)
        if cfg.temporal == "dve" and not cfg.use_dve:
            frames = [scene[-1:] for scene in frames]
        count = len(frames[0])
        if cfg.paint_points:
            images = inputs.images[:, -count:]
            frames = [
                [cloud.painted(images[b, t]) for t, cloud in enumerate(scene)]
                for b, scene in enumerate(frames)
            ]
        if cfg.temporal == "input_concat":
            spliced = [PointCloud.splice(scene) for scene in frames]
            keys: List[Hashable] = [(key, "spliced", count) for key in inputs.keys]
            positions, features = self._encode_points(spliced, keys)
            return positions, features, []
        encoded = [
            self._encode_points(
                [scene[t] for scene in frames],
                [(key, t - count, cfg.paint_points) for key in inputs.keys],
            )
            for t in range(count)
        ]
        positions, features = encoded[-1]
        earlier = encoded[:-1]
        if cfg.temporal == "feature_concat":
            if earlier:
                parts = [features]
                for previous_positions, previous_features in reversed(earlier):
                    index = nearest_seed(positions, previous_positions)
                    parts.append(F.gather(previous_features, index))
                features = self.temporal_mix(F.concat(parts, axis=-1))
            return positions, features, []
        previous = [
            FrameTokens(feats, Tensor(fourier3d(pos, cfg.dim)))
            for pos, feats in earlier
        ]
        return positions, features, previous

    def encode_images(
        self, inputs: ModelInput
    ) -> Tuple[Optional[ImageGridFeatures], List[FrameTokens]]:
        """Image tokens of the newest frame, plus earlier frames for the DVE."""
        if not self.config.use_images:
            return None, []
        cfg = self.config
        count = cfg.frames if cfg.temporal == "dve" and cfg.use_dve else 1
        images = inputs.images[:, -count:].astype(np.float64) / 255.0
        encoded = [self.image_encoder(images[:, t]) for t in range(count)]
        grid = encoded[-1].grid_shape
        position = Tensor(sine2d(*grid, self.config.dim))
        previous = [FrameTokens(item.tokens, position) for item in encoded[:-1]]
        return encoded[-1], previous

    def forward(self, inputs: ModelInput) -> Predictions:
        """Predict boxes and word alignments for a batch."""
        cfg = self.config
        positions, points, previous_points = self.encode_points(inputs)
        image, previous_images = self.encode_images(inputs)
        images = None if image is None else image.tokens
        if cfg.use_dve:
            points = self.point_dve(points, previous_points)
            if images is not None:
                dve = self.point_dve if cfg.share_dve else self.image_dve
                images = dve(images, previous_images)
        text = self.text_encoder(inputs.ids, inputs.spans, inputs.mask)
        visual, words = self.interaction(
            points,
            text.tokens,
            text.mask,
            images,
            positions,
            None if image is None else image.grid_shape,
        )
        logits = self.heads.seed_logits(visual)
        candidates = select_queries(visual, logits, positions, cfg.queries)
        decoded = self.decoder(candidates.features, visual, words, text.mask)
        return self.heads(decoded, words, candidates, text.mask, text.spans)
