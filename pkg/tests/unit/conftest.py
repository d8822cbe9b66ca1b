"""Pytest fixtures and plugins."""
# pylint: disable=redefined-outer-name
from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterator, cast

import numpy as np
import pytest
from click.testing import CliRunner

from wildground.autodiff import precision
from wildground.synthscenes import Batch, SceneDataset, build_dataset, collate
from wildground.synthscenes.dataset import MANIFEST_NAME

from .factories import tiny_run_config

if TYPE_CHECKING:
    from _pytest.config import Config
    from pytest import FixtureRequest, TempPathFactory

    from wildground.models.config import RunConfig

LOG = logging.getLogger(__name__)

TINY_TRAIN = 24
TINY_TEST = 4


# pylint: disable=unused-argument
def pytest_ignore_collect(collection_path: Any, config: Config) -> bool:
    """Determine if this directory should have its tests collected."""
    return cast(bool, config.option.functional)


@pytest.fixture(scope="function")
def cli_runner(request: FixtureRequest) -> CliRunner:
    """Initialize instance of `click.testing.CliRunner`."""
    kwargs = {"env": {"WILDGROUND_THREADS": "1"}}
    mark = request.node.get_closest_marker("cli_runner")
    if mark:
        kwargs.update(mark.kwargs)
    return CliRunner(**kwargs)


@pytest.fixture(scope="function")
def rng() -> np.random.Generator:
    """Fixed-seed generator."""
    return np.random.default_rng(1234)


@pytest.fixture(scope="function")
def float64() -> Iterator[None]:
    """Run the test with 64-bit tensors."""
    with precision("float64"):
        yield


@pytest.fixture(scope="session")
def tiny_manifest(tmp_path_factory: TempPathFactory) -> Path:
    """Manifest of a small two-frame dataset shared by the whole session."""
    out = tmp_path_factory.mktemp("dataset")
    build_dataset(out, TINY_TRAIN, TINY_TEST, seed=0, frames=2)
    LOG.info("built tiny dataset in %s", out)
    return out / MANIFEST_NAME


@pytest.fixture(scope="session")
def tiny_dataset(tiny_manifest: Path) -> SceneDataset:
    """The tiny dataset, opened."""
    return SceneDataset.open(tiny_manifest)


@pytest.fixture(scope="function")
def tiny_batch(tiny_dataset: SceneDataset) -> Batch:
    """First two train scenes of the tiny dataset, collated."""
    scenes = [tiny_dataset[path] for path in tiny_dataset.split("train", 2)]
    return collate(scenes, tiny_dataset.vocabulary)


@pytest.fixture(scope="function")
def tiny_config(tiny_manifest: Path) -> RunConfig:
    """Two-epoch run on the tiny dataset."""
    return tiny_run_config(tiny_manifest)
