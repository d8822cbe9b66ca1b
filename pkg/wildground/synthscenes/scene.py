"""Grounding samples and their generator."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, List, Optional, Sequence, cast

import numpy as np

from ..encoders.text import validate_spans
from ..exceptions import ConfigurationError, InvalidSceneError, MissingSpanError
from .actors import sample_actors
from .language import DIFFICULTY_KINDS, choose_referent, describe, template_vocabulary
from .points import clutter_points, frame_cloud
from .render import render_frame

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..encoders.vocabulary import Vocabulary
    from ..geometry.boxes import Box3D
    from ..pointnet.cloud import PointCloud
    from ..type_defs import Difficulty, Span
    from .actors import Actor

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

U8_MAX = 255
U16_MAX = 65535


class Scene:
    """Synchronized frames, one utterance and the box it refers to.

    Attributes:
        clouds: Point cloud of every frame, oldest first.
        images: ``K×H×W×3`` uint8 renders of the same frames.
        token_ids: Utterance ids, terminal token last.
        spans: Target span first, terminal span last, attribute spans between.
        gt_box: Box of the target in the newest frame.
        actors: Everyone in the scene with their per-frame boxes; empty when
            the scene was read without its actor annotations.
        target_id: Actor the utterance refers to, if annotated.
        scene_id: Name of the sample (the file stem once written).

    """

    def __init__(
        self,
        clouds: List[PointCloud],
        images: np.ndarray,
        token_ids: np.ndarray,
        spans: Sequence[Span],
        gt_box: Box3D,
        actors: Optional[List[Actor]] = None,
        target_id: Optional[int] = None,
        scene_id: str = "scene",
    ) -> None:
        """Instantiate class."""
        self.clouds = clouds
        self.images = np.asarray(images, dtype=np.uint8)
        self.token_ids = np.asarray(token_ids, dtype=np.int64)
        self.spans: List[Span] = [(int(b), int(e)) for b, e in spans]
        self.actors: List[Actor] = list(actors or [])
        self.target_id = target_id
        self.gt_box = gt_box
        self.scene_id = scene_id

    @property
    def frames(self) -> int:
        """Number of frames K."""
        return len(self.clouds)

    @property
    def num_points(self) -> int:
        """Points summed over every frame."""
        return sum(len(cloud) for cloud in self.clouds)

    @property
    def annotated(self) -> bool:
        """Whether the actors and the target id are known."""
        return bool(self.actors) and self.target_id is not None

    @property
    def target(self) -> Actor:
        """The referred actor.

        Raises:
            InvalidSceneError: The scene is not annotated or the target id is
                not among its actors.

        """
        if not self.annotated:
            raise InvalidSceneError(f"scene {self.scene_id} has no actor annotations")
        for actor in self.actors:
            if actor.actor_id == self.target_id:
                return actor
        raise InvalidSceneError(f"target {self.target_id} is not among the actors")

    def words(self, vocabulary: Vocabulary) -> List[str]:
        """Utterance words, terminal token included."""
        return vocabulary.decode(self.token_ids)

    def validate(self) -> None:
        """Check every invariant the file format relies on.

        Actor invariants are checked once the scene carries annotations.

        Raises:
            InvalidSceneError: An invariant does not hold.

        """
        if not self.clouds:
            raise InvalidSceneError("scene has no frames")
        frames = self.frames
        if self.images.ndim != 4 or self.images.shape[0] != frames:
            raise InvalidSceneError(
                f"expected {frames} images, got array of shape {self.images.shape}"
            )
        if self.images.shape[3] != 3 or max(self.images.shape[1:3]) > U16_MAX:
            raise InvalidSceneError("images must be RGB and at most 65535 pixels wide")
        if not 2 <= len(self.token_ids) <= U16_MAX:
            raise InvalidSceneError(f"utterance of {len(self.token_ids)} tokens")
        if self.token_ids.min() < 0 or self.token_ids.max() > U16_MAX:
            raise InvalidSceneError("token ids must fit in 16 bits")
        if len(self.spans) > U8_MAX:
            raise InvalidSceneError(f"{len(self.spans)} spans exceed {U8_MAX}")
        try:
            validate_spans(self.spans, len(self.token_ids))
        except (ValueError, MissingSpanError) as exc:
            raise InvalidSceneError(str(exc)) from exc
        if len(self.spans) < 2:
            raise InvalidSceneError("utterance has no target span")
        if self.actors or self.target_id is not None:
            self._validate_actors()

    def _validate_actors(self) -> None:
        if not self.actors:
            raise InvalidSceneError("scene has a target id but no actors")
        ids = [actor.actor_id for actor in self.actors]
        if len(set(ids)) != len(ids):
            raise InvalidSceneError("actor ids repeat")
        if any(len(actor.boxes) != self.frames for actor in self.actors):
            raise InvalidSceneError(f"every actor needs exactly {self.frames} boxes")
        if self.target.box != self.gt_box:
            raise InvalidSceneError("ground-truth box is not the target's newest box")

    def __eq__(self, other: object) -> bool:
        """Deep comparison of every field."""
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.scene_id == other.scene_id
            and self.frames == other.frames
            and all(
                np.array_equal(a.xyz, b.xyz)
                and np.array_equal(a.intensity, b.intensity)
                and a.frame_time == b.frame_time
                for a, b in zip(self.clouds, other.clouds)
            )
            and np.array_equal(self.images, other.images)
            and np.array_equal(self.token_ids, other.token_ids)
            and self.spans == other.spans
            and self.actors == other.actors
            and self.target_id == other.target_id
            and self.gt_box == other.gt_box
        )

    __hash__ = None  # type: ignore

    def __repr__(self) -> str:
        """Short description."""
        return (
            f"Scene({self.scene_id!r}, frames={self.frames}, "
            f"actors={len(self.actors)}, points={self.num_points})"
        )


def generate_scene(
    seed: int,
    difficulty: Difficulty = "default",
    *,
    frames: int = 2,
    scene_id: str = "scene",
    vocabulary: Optional[Vocabulary] = None,
) -> Scene:
    """Draw one scene deterministically from ``seed``.

    Layouts whose targets cannot be described unambiguously with the kinds
    of attributes ``difficulty`` allows are discarded and redrawn.

    Args:
        seed: Scene seed (see :func:`~wildground.synthscenes.seeds.child_seed`).
        difficulty: Which attributes utterances may mention.
        frames: Number of frames K.
        scene_id: Name given to the scene.
        vocabulary: Word ids (default: the template vocabulary).

    Raises:
        ConfigurationError: Unknown difficulty or fewer than one frame.

    """
    if difficulty not in DIFFICULTY_KINDS:
        raise ConfigurationError(f"unknown difficulty {difficulty!r}")
    if frames < 1:
        raise ConfigurationError("a scene needs at least one frame")
    rng = np.random.default_rng(seed)
    while True:
        actors = sample_actors(frames, rng)
        chosen = choose_referent(actors, difficulty, rng)
        if chosen is not None:
            break
        LOGGER.debug("no unambiguous %s utterance; redrawing layout", difficulty)
    target, attributes = chosen
    words, spans = describe(attributes)
    token_ids = (vocabulary or template_vocabulary()).encode(words)
    clutter = clutter_points([box for actor in actors for box in actor.boxes], rng)
    clouds = [frame_cloud(actors, clutter, frame, rng) for frame in range(frames)]
    images = np.stack(
        [render_frame(actors, clutter[0], frame) for frame in range(frames)]
    )
    return Scene(
        clouds=clouds,
        images=images,
        token_ids=token_ids,
        spans=spans,
        actors=actors,
        target_id=target.actor_id,
        gt_box=target.box,
        scene_id=scene_id,
    )
