"""Dataset generation and the manifest that lists it."""
# pylint: disable=no-self-argument,no-self-use
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    cast,
)

from pydantic import Field, root_validator, validator

from ..constants import (
    MANIFEST_FORMAT,
    NOT_MENTIONED,
    SCENE_FORMAT_VERSION,
    SCENE_SUFFIX,
)
from ..exceptions import (
    ConfigurationError,
    ManifestError,
    SceneVersionError,
    VocabularyCoverageError,
)
from ..models.base import BaseModel
from ..type_defs import Difficulty, Split
from .fileformat import write_scene
from .language import template_vocabulary
from .scene import Scene, generate_scene
from .seeds import child_seed

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..encoders.vocabulary import Vocabulary

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

MANIFEST_NAME = "manifest.txt"
VOCABULARY_NAME = "vocab.txt"
MIN_TRAIN_OCCURRENCES = 2
MAX_RESAMPLES = 50
"""Redraws of one test scene before the coverage rule is declared unsatisfiable."""

PROGRESS_EVERY = 100
HEADER_KEYS = (
    "format",
    "version",
    "seed",
    "difficulty",
    "frames",
    "n_train",
    "n_test",
    "vocabulary",
)


def scene_name(split: Split, index: int) -> str:
    """File stem and scene id of scene ``index`` of ``split``."""
    return f"{split}-{index:05d}"


def split_of(path: Path) -> Split:
    """Split a scene path belongs to, read from its file name."""
    prefix = path.stem.split("-", 1)[0]
    if prefix not in ("train", "test"):
        raise ValueError(f"{path} is not named after a split")
    return cast(Split, prefix)


class DatasetManifest(BaseModel):
    """Index of a generated dataset.

    Written as ``key: value`` header lines, a blank line, then one scene path
    per line relative to the manifest.

    .. rubric:: Example
    .. code-block:: text

        format: wildground-manifest
        version: 1
        seed: 0
        difficulty: default
        frames: 2
        n_train: 2
        n_test: 1
        vocabulary: vocab.txt

        train/train-00000.wgscn
        train/train-00001.wgscn
        test/test-00000.wgscn

    """

    base_dir: Optional[Path] = Field(None, exclude=True)
    """Directory the relative paths start from (the manifest's)."""

    format: str = MANIFEST_FORMAT
    version: int = SCENE_FORMAT_VERSION
    seed: int
    difficulty: Difficulty = "default"
    frames: int = 2
    n_train: int
    n_test: int
    vocabulary: Path = Path(VOCABULARY_NAME)

    scenes: List[Path] = []
    """Scene files relative to :attr:`base_dir`, train split first."""

    @validator("format")
    def _check_format(cls, v: str) -> str:
        if v != MANIFEST_FORMAT:
            raise ValueError(f"expected format {MANIFEST_FORMAT}, got {v}")
        return v

    @validator("frames", "n_train", "n_test")
    def _check_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @root_validator(skip_on_failure=True)
    def _check_scenes(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        scenes: List[Path] = values["scenes"]
        stems = [path.stem for path in scenes]
        if len(set(stems)) != len(stems):
            raise ValueError("scene ids repeat")
        splits = Counter(split_of(path) for path in scenes)
        if splits["train"] != values["n_train"] or splits["test"] != values["n_test"]:
            raise ValueError(
                f"{splits['train']} train and {splits['test']} test scenes listed, "
                f"header declares {values['n_train']} and {values['n_test']}"
            )
        return values

    def resolve(self, path: Path) -> Path:
        """Absolute form of a path listed in the manifest."""
        return path if path.is_absolute() else (self.base_dir or Path.cwd()) / path

    @property
    def vocabulary_path(self) -> Path:
        """Absolute path of the vocabulary file."""
        return self.resolve(self.vocabulary)

    def paths(self, split: Split) -> List[Path]:
        """Absolute scene paths of one split in manifest order."""
        return [self.resolve(path) for path in self.scenes if split_of(path) == split]

    def scene_ids(self, split: Split) -> List[str]:
        """Scene ids of one split."""
        return [path.stem for path in self.paths(split)]

    def render(self) -> str:
        """Manifest file text."""
        data = self.dict()
        lines = [f"{key}: {data[key]}" for key in HEADER_KEYS]
        lines.append("")
        lines.extend(path.as_posix() for path in self.scenes)
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_text(
        cls, text: str, base_dir: Optional[Path] = None, path: Optional[Path] = None
    ) -> DatasetManifest:
        """Parse manifest text.

        Raises:
            ManifestError: Malformed header, unknown keys or inconsistent counts.
            SceneVersionError: The dataset uses another scene format version.

        """
        header, _, listing = text.partition("\n\n")
        fields: Dict[str, Any] = {}
        for line in header.splitlines():
            key, sep, value = line.partition(":")
            if not sep:
                raise ManifestError(path, f"header line {line!r} is not 'key: value'")
            fields[key.strip()] = value.strip()
        version = int(fields.get("version", SCENE_FORMAT_VERSION))
        if version != SCENE_FORMAT_VERSION:
            raise SceneVersionError(path, SCENE_FORMAT_VERSION, version)
        fields["scenes"] = [Path(line) for line in listing.splitlines() if line.strip()]
        try:
            return cls.parse_obj({**fields, "base_dir": base_dir})
        except ValueError as exc:
            raise ManifestError(path, str(exc)) from exc

    @classmethod
    def load(cls, path: Path) -> DatasetManifest:
        """Read a manifest file."""
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ManifestError(path, str(exc)) from exc
        return cls.parse_text(text, path.parent.resolve(), path)

    def write(self, path: Path) -> Path:
        """Write the manifest to ``path``."""
        path.write_text(self.render(), encoding="utf-8")
        return path


def scene_words(scene: Scene, vocabulary: Vocabulary) -> Set[str]:
    """Distinct words of a scene's utterance, terminal token excluded."""
    return set(scene.words(vocabulary)) - {NOT_MENTIONED}


def word_frequency(scenes: Iterable[Scene], vocabulary: Vocabulary) -> Counter:
    """Number of scenes each word occurs in."""
    counts: Counter = Counter()
    for scene in scenes:
        counts.update(scene_words(scene, vocabulary))
    return counts


def undercovered(
    scene: Scene, train_counts: Counter, vocabulary: Vocabulary
) -> Set[str]:
    """Words of ``scene`` occurring in fewer than two training scenes."""
    return {
        word
        for word in scene_words(scene, vocabulary)
        if train_counts[word] < MIN_TRAIN_OCCURRENCES
    }


def _generate(
    seed: int, index: int, difficulty: Difficulty, frames: int, scene_id: str
) -> Scene:
    return generate_scene(
        child_seed(seed, index), difficulty, frames=frames, scene_id=scene_id
    )


def _generate_many(
    jobs: Sequence[Tuple[int, str]],
    seed: int,
    difficulty: Difficulty,
    frames: int,
    threads: int,
) -> List[Scene]:
    """Scenes of ``(child index, scene id)`` jobs in job order."""
    scenes: List[Scene] = []

    def collect(results: Iterable[Scene]) -> None:
        for scene in results:
            scenes.append(scene)
            if len(scenes) % PROGRESS_EVERY == 0:
                LOGGER.info("generated %d/%d scenes", len(scenes), len(jobs))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            collect(
                executor.map(
                    lambda job: _generate(seed, job[0], difficulty, frames, job[1]),
                    jobs,
                )
            )
    else:
        collect(
            _generate(seed, index, difficulty, frames, name) for index, name in jobs
        )
    return scenes


def build_dataset(
    out: Path,
    n_train: int,
    n_test: int,
    seed: int,
    difficulty: Difficulty = "default",
    *,
    frames: int = 2,
    threads: int = 1,
) -> DatasetManifest:
    """Generate both splits, enforce test word coverage and write everything.

    Scene ``i`` of the train split uses child seed ``i`` of ``seed`` and test
    scene ``j`` child seed ``n_train + j``. A test scene with a word found in
    fewer than two training scenes is redrawn from child seed
    ``n_train + r * n_test + j`` on its ``r``-th redraw.

    Args:
        out: Dataset directory (created if missing).
        n_train: Training scenes.
        n_test: Test scenes.
        seed: Master seed.
        difficulty: Which attributes utterances may mention.
        frames: Frames per scene.
        threads: Scenes generated concurrently.

    Raises:
        ConfigurationError: A split size is not positive.
        VocabularyCoverageError: Coverage still fails after the redraw limit.

    """
    if n_train <= 0 or n_test <= 0:
        raise ConfigurationError("split sizes must be positive")
    vocabulary = template_vocabulary()
    LOGGER.info(
        "generating %d train and %d test %s scenes (seed %d)",
        n_train,
        n_test,
        difficulty,
        seed,
    )
    train = _generate_many(
        [(i, scene_name("train", i)) for i in range(n_train)],
        seed,
        difficulty,
        frames,
        threads,
    )
    counts = word_frequency(train, vocabulary)
    test = _generate_many(
        [(n_train + j, scene_name("test", j)) for j in range(n_test)],
        seed,
        difficulty,
        frames,
        threads,
    )
    for j, scene in enumerate(test):
        redraw = 0
        missing = undercovered(scene, counts, vocabulary)
        while missing:
            redraw += 1
            if redraw > MAX_RESAMPLES:
                raise VocabularyCoverageError(missing)
            scene = _generate(
                seed, n_train + redraw * n_test + j, difficulty, frames, scene.scene_id
            )
            missing = undercovered(scene, counts, vocabulary)
        if redraw:
            LOGGER.verbose(
                "redrew %s %d times for word coverage", scene.scene_id, redraw
            )
        test[j] = scene

    out.mkdir(parents=True, exist_ok=True)
    scenes: List[Path] = []
    for split, items in (("train", train), ("test", test)):
        for scene in items:
            relative = Path(split) / f"{scene.scene_id}{SCENE_SUFFIX}"
            write_scene(scene, out / relative)
            scenes.append(relative)
    vocabulary.save(out / VOCABULARY_NAME)
    manifest = DatasetManifest(
        base_dir=out.resolve(),
        seed=seed,
        difficulty=difficulty,
        frames=frames,
        n_train=n_train,
        n_test=n_test,
        scenes=scenes,
    )
    manifest.write(out / MANIFEST_NAME)
    LOGGER.info("wrote %s", out / MANIFEST_NAME)
    return manifest
