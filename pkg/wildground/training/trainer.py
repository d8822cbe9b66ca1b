"""Training loop, checkpoints and the run report."""
from __future__ import annotations

import json
import logging
import math
import time
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, cast

import numpy as np

from ..autodiff import AdamW, Tape, load_checkpoint, precision, save_checkpoint
from ..exceptions import CheckpointMismatchError, NonFiniteError, NonFiniteLossError
from ..losses.objective import compute_losses
from ..model.network import GroundingModel
from ..models.reports import RunReport
from ..synthscenes.loader import SceneDataset
from ..synthscenes.seeds import child_seed
from .artifacts import LossLog, RunDirectory, loss_row
from .build import build_id
from .evaluator import ModelPredictor, evaluate, load_model

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..models.config import RunConfig
    from ..models.reports import EvalSummary, LossBreakdown
    from ..synthscenes.loader import Batch

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

INIT_STREAM = 0
"""Child seed index of the initial weights; epoch ``e`` uses ``1 + e``."""

TRAINER_KEYS = ("trainer.epoch", "trainer.step", "trainer.best", "trainer.loss_curve")


class Trainer:
    """Fits a :class:`~wildground.model.network.GroundingModel` to a dataset.

    Each epoch draws its shuffling order and dropout masks from one generator
    seeded with child seed ``1 + epoch`` of the run seed, so a run resumed
    from an end-of-epoch checkpoint continues exactly as the uninterrupted
    run would have.

    .. rubric:: Example
    .. code-block:: python

        config = RunConfig.parse_file_toml(Path("run.toml"))
        report = Trainer(config, Path("runs/full")).run()

    """

    def __init__(
        self,
        config: RunConfig,
        out: Path,
        *,
        dataset: Optional[SceneDataset] = None,
    ) -> None:
        """Instantiate class.

        Args:
            config: Run configuration.
            out: Run directory.
            dataset: Already opened dataset (default: open ``config.dataset``).

        """
        self.config = config
        self.run_dir = RunDirectory(out)
        self.dataset = dataset or SceneDataset.open(config.dataset)
        rng = np.random.default_rng(child_seed(config.seed, INIT_STREAM))
        with precision(config.dtype):
            self.model = GroundingModel(config.model, len(self.dataset.vocabulary), rng)
        self.optimizer = AdamW(
            self.model.param_groups(config.lr, config.point_lr),
            weight_decay=config.weight_decay,
        )
        self.fit_paths, self.val_paths = self.dataset.holdout(
            config.val_fraction, config.max_scenes
        )
        self.epoch = 0
        self.step = 0
        self.best_score = -math.inf
        self.best_epoch: Optional[int] = None
        self.loss_curve: List[float] = []
        self.best_summary: Optional[EvalSummary] = None
        self.resumed = False
        LOGGER.verbose(
            "%d fitting and %d validation scenes, %d parameters",
            len(self.fit_paths),
            len(self.val_paths),
            self.model.num_parameters(),
        )

    @property
    def decay_epoch(self) -> int:
        """Epoch at whose start the learning rates are decayed; 0 means never."""
        return int(self.config.epochs * self.config.lr_decay_at)

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Model, optimizer and loop state as float64 records."""
        return {
            **self.model.state_dict(),
            **self.optimizer.state_dict(),
            "trainer.epoch": np.array([self.epoch], dtype=np.float64),
            "trainer.step": np.array([self.step], dtype=np.float64),
            "trainer.best": np.array(
                [
                    self.best_score,
                    -1.0 if self.best_epoch is None else float(self.best_epoch),
                ],
                dtype=np.float64,
            ),
            "trainer.loss_curve": np.array(self.loss_curve, dtype=np.float64),
        }

    def load_state_dict(self, records: Dict[str, np.ndarray]) -> None:
        """Restore from :meth:`state_dict` output.

        Raises:
            CheckpointMismatchError: A record is missing or does not fit.

        """
        for key in TRAINER_KEYS:
            if key not in records:
                raise CheckpointMismatchError(key, missing=True)
        self.model.load_state_dict(records)
        self.optimizer.load_state_dict(records)
        self.epoch = int(records["trainer.epoch"].reshape(-1)[0])
        self.step = int(records["trainer.step"].reshape(-1)[0])
        best_score, best_epoch = records["trainer.best"].reshape(-1)[:2]
        self.best_score = float(best_score)
        self.best_epoch = None if best_epoch < 0 else int(best_epoch)
        self.loss_curve = [float(v) for v in records["trainer.loss_curve"].reshape(-1)]

    def resume(self, checkpoint: Path) -> Trainer:
        """Continue from a checkpoint written by this trainer."""
        self.load_state_dict(load_checkpoint(checkpoint))
        self.resumed = True
        LOGGER.info(
            "resuming from %s at epoch %d, step %d", checkpoint, self.epoch, self.step
        )
        return self

    def save(self, name: str) -> Path:
        """Write checkpoint ``name`` into the run directory."""
        return save_checkpoint(self.run_dir.checkpoint(name), self.state_dict())

    def train_step(self, batch: Batch) -> LossBreakdown:
        """One forward, backward and optimizer update.

        Raises:
            NonFiniteLossError: The loss or an intermediate value is NaN or Inf;
                the parameters are left untouched.

        """
        self.model.train()
        config = self.config
        try:
            with Tape() as tape:
                loss = compute_losses(
                    self.model(batch.inputs),
                    batch.targets,
                    config.loss,
                    config.model.temperature,
                )
            if not math.isfinite(loss.total.item()):
                parts = loss.breakdown.dict(by_alias=True)
                raise NonFiniteLossError(self.step + 1, parts)
            tape.backward(loss.total)
        except NonFiniteError as exc:
            self.optimizer.zero_grad()
            raise NonFiniteLossError(self.step + 1) from exc
        self.optimizer.step()
        self.step += 1
        return loss.breakdown

    def validate(self) -> Optional[EvalSummary]:
        """Held-out accuracy of the current parameters, if there is a held-out part."""
        if not self.val_paths:
            return None
        return evaluate(
            self.dataset,
            self.val_paths,
            ModelPredictor(self.model, self.config.dtype),
            batch_size=self.config.batch_size,
        ).summary

    def train_epoch(self, log: LossLog) -> float:
        """Run one epoch and return its mean total loss."""
        config = self.config
        epoch = self.epoch
        if epoch > 0 and epoch == self.decay_epoch:
            self.optimizer.scale_lr(config.lr_decay_factor)
            LOGGER.info(
                "epoch %d: learning rates decayed to %s",
                epoch + 1,
                self.optimizer.learning_rates,
            )
        rng = np.random.default_rng(child_seed(config.seed, 1 + epoch))
        self.model.set_rng(rng)
        totals: List[float] = []
        for batch in self.dataset.batches(self.fit_paths, config.batch_size, rng=rng):
            breakdown = self.train_step(batch)
            log.write(loss_row(self.step, breakdown))
            totals.append(breakdown.total)
            LOGGER.verbose(
                "step %d: %s",
                self.step,
                " ".join(
                    f"{key} {value:.5f}"
                    for key, value in breakdown.dict(by_alias=True).items()
                ),
            )
        mean = float(np.mean(totals)) if totals else 0.0
        self.loss_curve.append(mean)
        self.epoch += 1
        self._checkpoint(self.validate(), mean)
        return mean

    def _checkpoint(self, summary: Optional[EvalSummary], mean_loss: float) -> None:
        # without held-out scenes the lowest training loss stands in for accuracy
        score = -mean_loss if summary is None else summary.acc_025
        improved = score > self.best_score
        if improved:
            self.best_score = score
            self.best_epoch = self.epoch
            self.best_summary = summary
        LOGGER.info(
            "epoch %d/%d: loss %.5f%s%s",
            self.epoch,
            self.config.epochs,
            mean_loss,
            "" if summary is None else f", val Acc@0.25 {summary.acc_025:.4f}",
            " (best)" if improved else "",
        )
        if self.epoch % self.config.checkpoint_every == 0:
            self.save(f"epoch-{self.epoch:03d}")
        if improved:
            self.save("best")
        self.save("last")

    def _restore_best_summary(self) -> None:
        # a resumed run only knows the best epoch, not its held-out scores
        best = self.run_dir.checkpoint("best")
        if self.best_summary is not None or not self.val_paths or not best.is_file():
            return
        model = load_model(
            best, self.config.model, len(self.dataset.vocabulary), self.config.dtype
        )
        self.best_summary = evaluate(
            self.dataset,
            self.val_paths,
            ModelPredictor(model, self.config.dtype),
            batch_size=self.config.batch_size,
        ).summary

    def report(self, wall_clock_s: float, *, aborted: bool = False) -> RunReport:
        """Run report of the current state."""
        return RunReport(
            build_id=build_id(),
            seed=self.config.seed,
            dataset=str(self.config.dataset),
            config=json.loads(self.config.json(by_alias=True, exclude_none=True)),
            loss_curve=list(self.loss_curve),
            steps=self.step,
            wall_clock_s=wall_clock_s,
            best_epoch=self.best_epoch,
            summary=self.best_summary,
            aborted=aborted,
        )

    def run(self) -> RunReport:
        """Train the remaining epochs and write the run report.

        Raises:
            NonFiniteLossError: Training diverged. The report is written with
                ``aborted`` set and the checkpoints of earlier epochs are kept.

        """
        self.run_dir.create()
        self.run_dir.config_path.write_text(self.config.to_toml(), encoding="utf-8")
        started = time.perf_counter()
        LOGGER.info(
            "training %s for %d epochs into %s",
            self.config.dataset,
            self.config.epochs,
            self.run_dir.root,
        )
        log = LossLog(
            self.run_dir.loss_log, resume_step=self.step if self.resumed else None
        )
        try:
            with log, precision(self.config.dtype):
                while self.epoch < self.config.epochs:
                    self.train_epoch(log)
        except NonFiniteLossError as exc:
            LOGGER.error("stopping: %s", exc.message)
            self.run_dir.write_report(
                self.report(time.perf_counter() - started, aborted=True)
            )
            raise
        self._restore_best_summary()
        report = self.report(time.perf_counter() - started)
        self.run_dir.write_report(report)
        LOGGER.notice(
            "finished %d steps in %.1f s; best epoch %s",
            report.steps,
            report.wall_clock_s,
            report.best_epoch,
        )
        return report
