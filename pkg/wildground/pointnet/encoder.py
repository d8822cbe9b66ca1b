"""Set-abstraction point encoder.

Each stage samples centers with :func:`~.sampling.farthest_point_sample`,
groups neighbors with :func:`~.sampling.ball_query`, re-centers every group
on its center, runs a shared MLP over the members and max-pools the group.
The last stage's centers are the seeds handed to the rest of the model.

"""
from __future__ import annotations

import logging
import zlib
from collections import OrderedDict
from typing import (
    TYPE_CHECKING,
    Hashable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    cast,
)

import numpy as np

from ..autodiff import Tensor, functional as F
from ..autodiff.nn import MLP, Module, ModuleList
from ..exceptions import DimensionError
from .sampling import ball_query, farthest_point_sample

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..models.config import PointEncoderConfig, SetAbstractionStage
    from .cloud import PointCloud

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

GROUPING_CACHE_SIZE = 4096
"""Samplings kept per encoder; the least recently used is dropped first."""


class StageGroups(NamedTuple):
    """Sampling result of one stage for one cloud."""

    centers: np.ndarray
    """``S`` indices into the stage input."""

    neighbors: np.ndarray
    """``S×k`` indices into the stage input."""

    positions: np.ndarray
    """``S×3`` center positions."""


class Grouping(NamedTuple):
    """Every stage's sampling for one cloud.

    Depends only on point positions, so it can be computed once per frame and
    reused across epochs.

    """

    stages: List[StageGroups]

    @property
    def seeds(self) -> np.ndarray:
        """Positions of the final centers."""
        return self.stages[-1].positions


def build_grouping(xyz: np.ndarray, stages: Sequence[SetAbstractionStage]) -> Grouping:
    """Sample and group ``xyz`` for every stage of an encoder."""
    result: List[StageGroups] = []
    positions = xyz
    for stage in stages:
        centers = farthest_point_sample(positions, stage.seeds)
        neighbors = ball_query(
            positions, positions[centers], stage.radius, stage.neighbors
        )
        result.append(StageGroups(centers, neighbors, positions[centers]))
        positions = positions[centers]
    return Grouping(result)


class SeedSet(NamedTuple):
    """Encoded seeds of a batch."""

    positions: np.ndarray
    """``B×S×3`` seed positions."""

    features: Tensor
    """``B×S×C`` seed features."""


class SetAbstraction(Module):
    """One stage: a shared MLP over re-centered groups, then max over each group."""

    def __init__(
        self, stage: SetAbstractionStage, in_features: int, rng: np.random.Generator
    ) -> None:
        """Instantiate class.

        Args:
            stage: Sampling and layer widths.
            in_features: Width of the per-point features entering the stage.
            rng: Source of initial weights.

        """
        super().__init__()
        self.stage = stage
        self.in_features = in_features
        self.mlp = MLP([3 + in_features, *stage.mlp], rng)

    @property
    def out_features(self) -> int:
        """Width of the pooled features."""
        return self.stage.mlp[-1]

    def forward(self, grouped: Tensor) -> Tensor:
        """Pool ``B×S×k×(3+F)`` groups into ``B×S×C`` features."""
        if grouped.ndim != 4 or grouped.shape[-1] != 3 + self.in_features:
            raise DimensionError("set_abstraction", grouped.shape)
        return F.max(self.mlp(grouped), axis=2)


def _local_offsets(
    positions: Sequence[np.ndarray], groups: Sequence[StageGroups]
) -> np.ndarray:
    """``B×S×k×3`` neighbor offsets from their group centers."""
    return np.stack(
        [
            pos[group.neighbors] - group.positions[:, None, :]
            for pos, group in zip(positions, groups)
        ]
    )


class PointEncoder(Module):
    """Stacked set-abstraction stages producing seed tokens."""

    def __init__(
        self, config: PointEncoderConfig, in_features: int, rng: np.random.Generator
    ) -> None:
        """Instantiate class.

        Args:
            config: Stage layout.
            in_features: Per-point input width (1 for intensity, 4 when painted).
            rng: Source of initial weights.

        """
        super().__init__()
        self.config = config
        self.in_features = in_features
        modules: List[SetAbstraction] = []
        width = in_features
        for stage in config.stages:
            modules.append(SetAbstraction(stage, width, rng))
            width = stage.mlp[-1]
        self.stages = ModuleList(modules)
        self._groupings: OrderedDict[Hashable, Grouping] = OrderedDict()

    def group(self, cloud: PointCloud, key: Optional[Hashable] = None) -> Grouping:
        """Sampling of ``cloud`` for this encoder's stages.

        Args:
            cloud: Cloud to sample.
            key: Identity of the cloud (scene and frame). Results are cached
                under it together with a fingerprint of the positions, so
                clouds of other datasets reusing the key are sampled afresh.

        """
        if key is None:
            return build_grouping(cloud.xyz, self.config.stages)
        xyz = np.ascontiguousarray(cloud.xyz)
        entry = (key, len(xyz), zlib.crc32(xyz.tobytes()))
        if entry in self._groupings:
            self._groupings.move_to_end(entry)
            return self._groupings[entry]
        grouping = build_grouping(xyz, self.config.stages)
        self._groupings[entry] = grouping
        if len(self._groupings) > GROUPING_CACHE_SIZE:
            self._groupings.popitem(last=False)
        return grouping

    def clear_groupings(self) -> None:
        """Forget every cached sampling."""
        self._groupings.clear()

    def forward(
        self,
        clouds: Sequence[PointCloud],
        keys: Optional[Sequence[Optional[Hashable]]] = None,
    ) -> SeedSet:
        """Encode a batch of clouds.

        Args:
            clouds: One cloud per batch element.
            keys: Cache keys of the clouds for :meth:`group`.

        """
        if keys is None:
            keys = [None] * len(clouds)
        groupings = [self.group(cloud, key) for cloud, key in zip(clouds, keys)]
        for cloud in clouds:
            if cloud.feature_dim != self.in_features:
                raise DimensionError(
                    "point_encoder",
                    (len(cloud), cloud.feature_dim),
                    detail=f"encoder expects {self.in_features} point features",
                )
        positions = [cloud.xyz for cloud in clouds]
        features: Optional[Tensor] = None
        for index, stage in enumerate(cast("List[SetAbstraction]", list(self.stages))):
            groups = [grouping.stages[index] for grouping in groupings]
            offsets = _local_offsets(positions, groups)
            if features is None:
                raw = np.stack(
                    [
                        cloud.features()[group.neighbors]
                        for cloud, group in zip(clouds, groups)
                    ]
                )
                grouped = Tensor(np.concatenate([offsets, raw], axis=-1))
            else:
                batch, seeds, neighbors, _ = offsets.shape
                flat = np.stack([group.neighbors.reshape(-1) for group in groups])
                members = F.reshape(
                    F.gather(features, flat),
                    (batch, seeds, neighbors, features.shape[-1]),
                )
                grouped = F.concat([Tensor(offsets), members], axis=-1)
            features = stage(grouped)
            positions = [group.positions for group in groups]
        LOGGER.debug(
            "encoded %d clouds into %s seed features",
            len(clouds),
            None if features is None else features.shape,
        )
        return SeedSet(np.stack(positions), cast(Tensor, features))
