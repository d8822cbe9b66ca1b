"""Reading datasets back as model batches."""
from __future__ import annotations

import logging
import queue
import threading
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Dict,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
    cast,
)

import numpy as np

from ..encoders.text import pad_utterances
from ..encoders.vocabulary import Vocabulary
from ..model.network import ModelInput
from .dataset import DatasetManifest
from .fileformat import read_scene

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..geometry.boxes import Box3D
    from ..type_defs import Split
    from .scene import Scene

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

PREFETCH = 2
"""Batches read ahead of the consumer."""


class Batch(NamedTuple):
    """Collated scenes."""

    inputs: ModelInput
    targets: List[Box3D]
    """Ground-truth box of every scene."""

    scenes: List[Scene]


def collate(scenes: Sequence[Scene], vocabulary: Vocabulary) -> Batch:
    """Stack scenes into one batch; utterances are padded with the terminal id."""
    ids, mask = pad_utterances(
        [scene.token_ids for scene in scenes], vocabulary.terminal_id
    )
    inputs = ModelInput(
        clouds=[list(scene.clouds) for scene in scenes],
        images=np.stack([scene.images for scene in scenes]),
        ids=ids,
        mask=mask,
        spans=[list(scene.spans) for scene in scenes],
        keys=[scene.scene_id for scene in scenes],
    )
    return Batch(inputs, [scene.gt_box for scene in scenes], list(scenes))


class SceneDataset:
    """Scenes listed by a manifest, read lazily and kept in memory.

    .. rubric:: Example
    .. code-block:: python

        dataset = SceneDataset.open(Path("data/manifest.txt"))
        train, val = dataset.holdout(0.1)
        for batch in dataset.batches(train, 8, rng=np.random.default_rng(0)):
            ...

    """

    def __init__(self, manifest: DatasetManifest, vocabulary: Vocabulary) -> None:
        """Instantiate class."""
        self.manifest = manifest
        self.vocabulary = vocabulary
        self._cache: Dict[Path, Scene] = {}
        self._lock = threading.Lock()

    @classmethod
    def open(cls, manifest_path: Path) -> SceneDataset:
        """Load a manifest and its vocabulary."""
        manifest = DatasetManifest.load(manifest_path)
        return cls(manifest, Vocabulary.load(manifest.vocabulary_path))

    def split(self, name: Split, limit: Optional[int] = None) -> List[Path]:
        """Scene paths of a split, optionally only the first ``limit``."""
        paths = self.manifest.paths(name)
        return paths if limit is None else paths[:limit]

    def holdout(
        self, fraction: float, limit: Optional[int] = None
    ) -> Tuple[List[Path], List[Path]]:
        """Train paths split into fitting and validation parts.

        The validation part is the last ``fraction`` of the (limited) train
        split, at least one scene when ``fraction`` is positive and the split
        has more than one scene.

        """
        paths = self.split("train", limit)
        count = int(round(len(paths) * fraction))
        if fraction > 0 and len(paths) > 1:
            count = min(max(count, 1), len(paths) - 1)
        else:
            count = 0
        return paths[: len(paths) - count], paths[len(paths) - count :]

    def __len__(self) -> int:
        """Scenes in both splits."""
        return len(self.manifest.scenes)

    def __getitem__(self, path: Union[Path, int]) -> Scene:
        """Scene at ``path``, or at position ``path`` of the manifest listing."""
        if isinstance(path, int):
            path = self.manifest.resolve(self.manifest.scenes[path])
        with self._lock:
            cached = self._cache.get(path)
        if cached is not None:
            return cached
        scene = read_scene(path)
        with self._lock:
            self._cache[path] = scene
        return scene

    def batches(
        self,
        paths: Sequence[Path],
        batch_size: int,
        *,
        rng: Optional[np.random.Generator] = None,
        prefetch: int = PREFETCH,
    ) -> Iterator[Batch]:
        """Batches over ``paths``, shuffled when ``rng`` is given.

        Scene files are read on a background thread that stays at most
        ``prefetch`` batches ahead.

        """
        order = list(paths)
        if rng is not None:
            order = [order[i] for i in rng.permutation(len(order))]
        groups = [
            order[start : start + batch_size]
            for start in range(0, len(order), batch_size)
        ]
        if prefetch <= 0:
            for group in groups:
                yield collate([self[path] for path in group], self.vocabulary)
            return
        pending: queue.Queue = queue.Queue(maxsize=prefetch)
        done = object()
        stop = threading.Event()

        def produce() -> None:
            try:
                for group in groups:
                    if stop.is_set():
                        return
                    scenes = [self[path] for path in group]
                    pending.put(collate(scenes, self.vocabulary))
            except Exception as exc:  # pylint: disable=broad-except
                pending.put(exc)
            pending.put(done)

        worker = threading.Thread(target=produce, name="scene-prefetch", daemon=True)
        worker.start()
        try:
            while True:
                item = pending.get()
                if item is done:
                    break
                if isinstance(item, Exception):
                    raise item
                yield cast(Batch, item)
        finally:
            stop.set()
            while worker.is_alive():
                try:
                    pending.get_nowait()
                except queue.Empty:
                    worker.join(timeout=0.01)
