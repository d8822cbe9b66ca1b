"""Test wildground.training.trainer."""
# pylint: disable=no-self-use,redefined-outer-name,unused-argument
from __future__ import annotations

import math
from typing import TYPE_CHECKING, Tuple

import numpy as np
import pytest
from mock import Mock

from wildground.autodiff import load_checkpoint
from wildground.exceptions import (
    CheckpointMismatchError,
    NonFiniteError,
    NonFiniteLossError,
)
from wildground.models.config import RunConfig
from wildground.models.reports import RunReport
from wildground.training.artifacts import LOSS_COLUMNS, RunDirectory, read_loss_log
from wildground.training.trainer import Trainer

from ...factories import tiny_run_config

if TYPE_CHECKING:
    from pathlib import Path

    from pytest import TempPathFactory
    from pytest_mock import MockerFixture

    from wildground.synthscenes import Batch, SceneDataset

MODULE = "wildground.training.trainer"


@pytest.fixture(scope="module")
def small_config(tiny_manifest: Path) -> RunConfig:
    """Two epochs of two steps each with two validation scenes."""
    return tiny_run_config(tiny_manifest, max_scenes=8)


@pytest.fixture(scope="module")
def finished_run(
    small_config: RunConfig,
    tiny_dataset: SceneDataset,
    tmp_path_factory: TempPathFactory,
) -> Tuple[RunReport, RunDirectory]:
    """A completed run shared by the read-only tests."""
    out = tmp_path_factory.mktemp("run")
    report = Trainer(small_config, out, dataset=tiny_dataset).run()
    return report, RunDirectory(out)


class TestTrainer:
    """Test Trainer."""

    def test_init(self, small_config: RunConfig, tiny_dataset: SceneDataset) -> None:
        """Test holdout and the initial loop state."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        assert len(trainer.fit_paths) == 6
        assert len(trainer.val_paths) == 2
        assert (trainer.epoch, trainer.step) == (0, 0)
        assert trainer.best_epoch is None
        assert trainer.decay_epoch == 1

    def test_init_deterministic(
        self, small_config: RunConfig, tiny_dataset: SceneDataset
    ) -> None:
        """Test the initial weights depend on the seed only."""
        first = Trainer(small_config, Mock(), dataset=tiny_dataset).model.state_dict()
        second = Trainer(small_config, Mock(), dataset=tiny_dataset).model.state_dict()
        other = Trainer(
            small_config.copy(update={"seed": 1}), Mock(), dataset=tiny_dataset
        ).model.state_dict()
        name = next(iter(first))
        np.testing.assert_array_equal(first[name], second[name])
        assert not np.array_equal(first[name], other[name])

    @pytest.mark.parametrize(
        "epochs, lr_decay_at, expected", [(10, 0.75, 7), (4, 0.0, 0)]
    )
    def test_decay_epoch(
        self,
        epochs: int,
        expected: int,
        lr_decay_at: float,
        small_config: RunConfig,
        tiny_dataset: SceneDataset,
    ) -> None:
        """Test the epoch the learning rates drop at."""
        config = small_config.copy(
            update={"epochs": epochs, "lr_decay_at": lr_decay_at}
        )
        assert Trainer(config, Mock(), dataset=tiny_dataset).decay_epoch == expected

    def test_state_dict(
        self, small_config: RunConfig, tiny_dataset: SceneDataset
    ) -> None:
        """Test loop state survives a state dict."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        trainer.epoch, trainer.step = 3, 12
        trainer.best_score, trainer.best_epoch = 0.5, 2
        trainer.loss_curve = [3.0, 2.5, 2.25]
        restored = Trainer(small_config, Mock(), dataset=tiny_dataset)
        restored.load_state_dict(trainer.state_dict())
        assert (restored.epoch, restored.step) == (3, 12)
        assert (restored.best_score, restored.best_epoch) == (0.5, 2)
        assert restored.loss_curve == [3.0, 2.5, 2.25]

    def test_state_dict_no_best(
        self, small_config: RunConfig, tiny_dataset: SceneDataset
    ) -> None:
        """Test a trainer without a best epoch yet."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        restored = Trainer(small_config, Mock(), dataset=tiny_dataset)
        restored.load_state_dict(trainer.state_dict())
        assert restored.best_epoch is None
        assert restored.best_score == -math.inf

    @pytest.mark.parametrize("key", ["trainer.epoch", "trainer.best"])
    def test_load_state_dict_missing(
        self, key: str, small_config: RunConfig, tiny_dataset: SceneDataset
    ) -> None:
        """Test a checkpoint without loop state."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        records = trainer.state_dict()
        del records[key]
        with pytest.raises(CheckpointMismatchError) as excinfo:
            trainer.load_state_dict(records)
        assert excinfo.value.name == key

    def test_train_step(
        self,
        float64: None,
        small_config: RunConfig,
        tiny_batch: Batch,
        tiny_dataset: SceneDataset,
    ) -> None:
        """Test one update changes the parameters and counts the step."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        before = trainer.model.state_dict()
        breakdown = trainer.train_step(tiny_batch)
        assert trainer.step == 1
        assert math.isfinite(breakdown.total)
        after = trainer.model.state_dict()
        assert any(not np.array_equal(before[k], after[k]) for k in before)

    def test_train_step_non_finite_op(
        self,
        float64: None,
        mocker: MockerFixture,
        small_config: RunConfig,
        tiny_batch: Batch,
        tiny_dataset: SceneDataset,
    ) -> None:
        """Test an operation overflowing leaves the parameters untouched."""
        mocker.patch(f"{MODULE}.compute_losses", side_effect=NonFiniteError("softmax"))
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        before = trainer.model.state_dict()
        with pytest.raises(NonFiniteLossError) as excinfo:
            trainer.train_step(tiny_batch)
        assert excinfo.value.step == 1
        assert isinstance(excinfo.value.__cause__, NonFiniteError)
        assert trainer.step == 0
        after = trainer.model.state_dict()
        assert all(np.array_equal(before[k], after[k]) for k in before)

    def test_train_step_nan_loss(
        self,
        float64: None,
        mocker: MockerFixture,
        small_config: RunConfig,
        tiny_batch: Batch,
        tiny_dataset: SceneDataset,
    ) -> None:
        """Test a NaN total is reported with the terms that were computed."""
        loss = Mock(name="loss")
        loss.total.item.return_value = math.nan
        loss.breakdown.dict.return_value = {"L_s": 1.0}
        mocker.patch(f"{MODULE}.compute_losses", return_value=loss)
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        with pytest.raises(NonFiniteLossError) as excinfo:
            trainer.train_step(tiny_batch)
        assert excinfo.value.parts == {"L_s": 1.0}
        assert "last good checkpoint retained" in excinfo.value.message

    def test_checkpoint_strict_improvement(
        self, mocker: MockerFixture, small_config: RunConfig, tiny_dataset: SceneDataset
    ) -> None:
        """Test an equal score keeps the earlier best epoch."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        mock_save = mocker.patch.object(trainer, "save")
        summary = Mock(acc_025=0.5)
        trainer.epoch = 1
        trainer._checkpoint(summary, 2.0)  # pylint: disable=protected-access
        trainer.epoch = 2
        trainer._checkpoint(summary, 1.0)  # pylint: disable=protected-access
        assert trainer.best_epoch == 1
        assert [c.args[0] for c in mock_save.call_args_list] == [
            "epoch-001",
            "best",
            "last",
            "epoch-002",
            "last",
        ]

    def test_checkpoint_without_validation(
        self, mocker: MockerFixture, small_config: RunConfig, tiny_dataset: SceneDataset
    ) -> None:
        """Test the lowest training loss picks the best epoch."""
        trainer = Trainer(small_config, Mock(), dataset=tiny_dataset)
        mocker.patch.object(trainer, "save")
        for epoch, loss in enumerate([3.0, 2.0, 2.5], start=1):
            trainer.epoch = epoch
            trainer._checkpoint(None, loss)  # pylint: disable=protected-access
        assert trainer.best_epoch == 2
        assert trainer.best_score == -2.0


class TestRun:
    """Test a full run."""

    def test_files(self, finished_run: Tuple[RunReport, RunDirectory]) -> None:
        """Test everything a run leaves behind."""
        _, run = finished_run
        assert RunConfig.parse_file_toml(run.config_path).epochs == 2
        for name in ("epoch-001", "epoch-002", "best", "last"):
            assert run.checkpoint(name).is_file()
        assert run.read_report() == finished_run[0]

    def test_loss_log(self, finished_run: Tuple[RunReport, RunDirectory]) -> None:
        """Test one row per step."""
        _, run = finished_run
        rows = read_loss_log(run.loss_log)
        assert [row["step"] for row in rows] == [1, 2, 3, 4]
        assert all(tuple(row) == LOSS_COLUMNS for row in rows)
        assert all(math.isfinite(row["total"]) and row["total"] > 0 for row in rows)

    def test_report(self, finished_run: Tuple[RunReport, RunDirectory]) -> None:
        """Test the report contents."""
        report, run = finished_run
        assert report.steps == 4
        assert len(report.loss_curve) == 2
        assert report.best_epoch in (1, 2)
        assert report.summary is not None
        assert report.summary.n_samples == 2
        assert not report.aborted
        assert report.config["max_scenes"] == 8
        assert report.wall_clock_s > 0
        last = load_checkpoint(run.checkpoint("last"))
        assert last["trainer.step"][0] == 4
        np.testing.assert_array_equal(last["trainer.loss_curve"], report.loss_curve)

    def test_resume(
        self,
        finished_run: Tuple[RunReport, RunDirectory],
        small_config: RunConfig,
        tiny_dataset: SceneDataset,
        tmp_path: Path,
    ) -> None:
        """Test one epoch plus a resumed epoch matches two epochs."""
        report, run = finished_run
        first = small_config.copy(update={"epochs": 1})
        Trainer(first, tmp_path, dataset=tiny_dataset).run()
        resumed = (
            Trainer(small_config, tmp_path, dataset=tiny_dataset)
            .resume(RunDirectory(tmp_path).checkpoint("last"))
            .run()
        )
        assert resumed.steps == report.steps
        np.testing.assert_allclose(resumed.loss_curve, report.loss_curve, rtol=1e-12)
        expected = load_checkpoint(run.checkpoint("last"))
        actual = load_checkpoint(RunDirectory(tmp_path).checkpoint("last"))
        assert expected.keys() == actual.keys()
        for key, value in expected.items():
            np.testing.assert_allclose(actual[key], value, rtol=1e-12, err_msg=key)
        rows = read_loss_log(RunDirectory(tmp_path).loss_log)
        assert [row["step"] for row in rows] == [1, 2, 3, 4]
        assert resumed.summary is not None

    def test_diverged(
        self,
        mocker: MockerFixture,
        small_config: RunConfig,
        tiny_dataset: SceneDataset,
        tmp_path: Path,
    ) -> None:
        """Test the report is written with the aborted flag."""
        mocker.patch.object(Trainer, "train_step", side_effect=NonFiniteLossError(1))
        with pytest.raises(NonFiniteLossError):
            Trainer(small_config, tmp_path, dataset=tiny_dataset).run()
        report = RunDirectory(tmp_path).read_report()
        assert report.aborted
        assert report.steps == 0
        assert not RunDirectory(tmp_path).checkpoint("last").exists()
