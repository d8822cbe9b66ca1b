"""Templated referring expressions and the symbolic resolver that grounds them."""
# pylint: disable=no-self-argument,no-self-use
from __future__ import annotations

import itertools
import logging
from functools import lru_cache
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple, cast

from ..constants import NOT_MENTIONED
from ..encoders.vocabulary import Vocabulary
from ..exceptions import InvalidSceneError
from ..models.base import BaseModel
from ..type_defs import CarriedName, ColorName, MotionName, SpatialName
from .actors import CARRIED, COLORS, MOTIONS

if TYPE_CHECKING:
    import numpy as np

    from .._logging import WildgroundLogger
    from ..type_defs import Difficulty, Span
    from .actors import Actor

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

ATTRIBUTE_KINDS: Tuple[str, ...] = ("color", "motion", "carried", "spatial")
DIFFICULTY_KINDS: Dict[str, Tuple[str, ...]] = {
    "default": ATTRIBUTE_KINDS,
    "color-only": ("color",),
    "motion-only": ("motion",),
}
"""Attribute kinds an utterance of each difficulty may mention."""

SPATIAL_PHRASES: Dict[str, Tuple[str, ...]] = {
    "near": ("closest", "to", "the", "sensor"),
    "far": ("farthest", "from", "the", "sensor"),
    "left": ("furthest", "to", "the", "left"),
    "right": ("furthest", "to", "the", "right"),
}
SPATIAL_MARGIN = 1.0
"""Meters by which the referent must beat the runner-up of a superlative."""

TARGET_ATTEMPTS = 100


class Attributes(BaseModel):
    """What an utterance says about its referent; unset fields are unmentioned."""

    color: Optional[ColorName] = None
    motion: Optional[MotionName] = None
    carried: Optional[CarriedName] = None
    spatial: Optional[SpatialName] = None
    """Superlative among the actors matching the other attributes."""

    def kinds(self) -> List[str]:
        """Mentioned attribute kinds."""
        return [kind for kind in ATTRIBUTE_KINDS if getattr(self, kind) is not None]


def template_words() -> List[str]:
    """Every word the templates can produce, terminal token excluded."""
    words = {"the", "person", "who", "is", "with", "a", "an"}
    words.update(COLORS, MOTIONS, CARRIED)
    for phrase in SPATIAL_PHRASES.values():
        words.update(phrase)
    return sorted(words)


@lru_cache(maxsize=None)
def template_vocabulary() -> Vocabulary:
    """The fixed vocabulary shared by every generated scene."""
    return Vocabulary.from_words(template_words())


def spatial_key(actor: Actor, relation: str) -> float:
    """Score that grows as ``actor`` fits the superlative ``relation`` better.

    Left is ``+y`` in sensor coordinates; positions are taken from the newest
    frame.

    """
    box = actor.box
    if relation == "near":
        return -actor.range_m()
    if relation == "far":
        return actor.range_m()
    if relation == "left":
        return box.y
    return -box.y


def _matches(actor: Actor, attributes: Attributes) -> bool:
    return all(
        getattr(attributes, kind) is None
        or getattr(attributes, kind) == getattr(actor, kind)
        for kind in ("color", "motion", "carried")
    )


def resolve(actors: Sequence[Actor], attributes: Attributes) -> List[Actor]:
    """Actors the description fits.

    Intrinsic attributes filter first; a spatial superlative then keeps the
    most extreme of the remaining actors (all of them on an exact tie).

    """
    candidates = [actor for actor in actors if _matches(actor, attributes)]
    if attributes.spatial is None or not candidates:
        return candidates
    keys = [spatial_key(actor, attributes.spatial) for actor in candidates]
    best = max(keys)
    return [actor for actor, key in zip(candidates, keys) if key == best]


def identifies(target: Actor, actors: Sequence[Actor], attributes: Attributes) -> bool:
    """Whether ``attributes`` pick out ``target`` alone, superlatives by a margin."""
    if [actor.actor_id for actor in resolve(actors, attributes)] != [target.actor_id]:
        return False
    if attributes.spatial is None:
        return True
    others = [
        spatial_key(actor, attributes.spatial)
        for actor in actors
        if actor.actor_id != target.actor_id and _matches(actor, attributes)
    ]
    if not others:
        return True
    return spatial_key(target, attributes.spatial) - max(others) >= SPATIAL_MARGIN


def _options(target: Actor, kinds: Sequence[str]) -> List[Attributes]:
    """Every description of ``target`` mentioning exactly ``kinds``."""
    if "carried" in kinds and target.carried is None:
        return []
    fields = {kind: getattr(target, kind) for kind in kinds if kind != "spatial"}
    if "spatial" not in kinds:
        return [Attributes(**fields)]
    return [Attributes(**fields, spatial=relation) for relation in SPATIAL_PHRASES]


def minimal_description(
    target: Actor,
    actors: Sequence[Actor],
    kinds: Sequence[str],
    rng: np.random.Generator,
) -> Optional[Attributes]:
    """Smallest description of ``target`` that no other actor fits.

    Among equally small descriptions one is drawn at random.

    Returns:
        ``None`` when no combination of ``kinds`` is unambiguous.

    """
    for size in range(1, len(kinds) + 1):
        found = [
            option
            for subset in itertools.combinations(kinds, size)
            for option in _options(target, subset)
            if identifies(target, actors, option)
        ]
        if found:
            return found[int(rng.integers(len(found)))]
    return None


def choose_referent(
    actors: Sequence[Actor], difficulty: Difficulty, rng: np.random.Generator
) -> Optional[Tuple[Actor, Attributes]]:
    """Draw a target and its minimal description.

    Returns:
        ``None`` after 100 targets without an unambiguous description; the
        caller then draws a new layout.

    """
    kinds = DIFFICULTY_KINDS[difficulty]
    for _ in range(TARGET_ATTEMPTS):
        target = actors[int(rng.integers(len(actors)))]
        description = minimal_description(target, actors, kinds, rng)
        if description is not None:
            return target, description
    return None


def describe(attributes: Attributes) -> Tuple[List[str], List[Span]]:
    """Utterance words and spans, terminal token and span included.

    The first span is the head noun phrase, each mentioned attribute phrase
    follows as its own span and the last span is the terminal token.

    """
    words = ["the", *([attributes.color] if attributes.color else []), "person"]
    spans: List[Span] = [(0, len(words))]
    phrases: List[Sequence[str]] = []
    if attributes.motion:
        phrases.append(("who", "is", attributes.motion))
    if attributes.carried:
        article = "an" if attributes.carried[0] in "aeiou" else "a"
        phrases.append(("with", article, attributes.carried))
    if attributes.spatial:
        phrases.append(SPATIAL_PHRASES[attributes.spatial])
    for phrase in [*phrases, (NOT_MENTIONED,)]:
        spans.append((len(words), len(words) + len(phrase)))
        words.extend(phrase)
    return words, spans


def parse_words(words: Sequence[str]) -> Attributes:
    """Recover the description from utterance words."""
    fields: Dict[str, str] = {}
    for index, word in enumerate(words):
        if word in COLORS:
            fields.setdefault("color", word)
        elif word in MOTIONS and index and words[index - 1] == "is":
            fields.setdefault("motion", word)
        elif word in CARRIED:
            fields.setdefault("carried", word)
    for relation, phrase in SPATIAL_PHRASES.items():
        width = len(phrase)
        if any(
            tuple(words[i : i + width]) == phrase
            for i in range(len(words) - width + 1)
        ):
            fields["spatial"] = relation
            break
    return Attributes.parse_obj(fields)


def ground_words(actors: Sequence[Actor], words: Sequence[str]) -> Actor:
    """The single actor an utterance refers to.

    Raises:
        InvalidSceneError: The utterance fits no actor or several.

    """
    found = resolve(actors, parse_words(words))
    if len(found) != 1:
        raise InvalidSceneError(
            f"utterance {' '.join(words)!r} fits {len(found)} actors"
        )
    return found[0]
