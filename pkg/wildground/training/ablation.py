"""Ablation suites: train and evaluate model variants over repeated seeds."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, NamedTuple, Optional, Tuple, cast

import numpy as np
from pydantic import ValidationError

from ..exceptions import ConfigurationError, WildgroundError
from ..models.config import MODEL_PRESETS, ModelConfig
from ..models.reports import AblationRow
from ..synthscenes.loader import SceneDataset
from .artifacts import write_rows
from .evaluator import ModelPredictor, evaluate, load_model
from .trainer import Trainer

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..models.config import PresetName, RunConfig
    from ..type_defs import AblationSuite

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

ROWS_NAME = "rows.csv"
TABLE_NAME = "table.csv"
METRICS = ("acc_025", "acc_05", "miou")
ROW_COLUMNS = ("suite", "variant", "seed", "difficulty", "status", *METRICS, "error")
TABLE_COLUMNS = (
    "suite",
    "variant",
    "runs",
    "failed",
    *(f"{metric}_{stat}" for metric in METRICS for stat in ("mean", "std")),
)


class Variant(NamedTuple):
    """A model preset with switches changed."""

    name: str
    preset: PresetName
    overrides: Dict[str, Any] = {}

    def model_config(self, base: ModelConfig) -> ModelConfig:
        """``base`` with this variant's preset and overrides applied."""
        return ModelConfig.parse_obj(
            {**base.dict(), **MODEL_PRESETS[self.preset], **self.overrides}
        )


COMPONENTS: Tuple[Tuple[str, PresetName], ...] = (
    ("baseline", "baseline"),
    ("dve", "dve"),
    ("dve+tfi", "full"),
)
"""Component presets crossed with the DVE frame count."""

SUITES: Dict[str, Tuple[Variant, ...]] = {
    "components": tuple(
        Variant(f"{name}-k{k}", preset, {"frames": k})
        for name, preset in COMPONENTS
        for k in (1, 2, 3)
    ),
    "frames": tuple(
        Variant(f"frames-{k}", "dve", {"frames": k}) for k in range(1, 5)
    ),
    "fusion": (
        Variant("ours", "full", {"fusion": "ours"}),
        Variant("vision-first", "full", {"fusion": "vision_first"}),
        Variant("image-dominant", "full", {"fusion": "image_dominant"}),
        Variant("concat", "full", {"fusion": "concat"}),
        Variant("painted", "dve", {"paint_points": True}),
    ),
    "temporal": (
        Variant("dve", "dve", {"temporal": "dve"}),
        Variant("input-concat", "dve", {"temporal": "input_concat"}),
        Variant("feature-concat", "dve", {"temporal": "feature_concat"}),
    ),
}
"""Variants of every suite; ``all`` runs them in this order."""


def suite_variants(suite: AblationSuite) -> List[Tuple[str, Variant]]:
    """``(suite, variant)`` pairs to run.

    Raises:
        ConfigurationError: Unknown suite name.

    """
    if suite == "all":
        return [(name, variant) for name in SUITES for variant in SUITES[name]]
    if suite not in SUITES:
        raise ConfigurationError(
            f"unknown ablation suite {suite!r}; choose from all, {', '.join(SUITES)}"
        )
    return [(suite, variant) for variant in SUITES[suite]]


class AblationRunner:
    """Runs a suite against one dataset.

    Every variant is trained with seeds ``config.seed``,
    ``config.seed + 1``... into ``<out>/<suite>/<variant>/seed-<n>/`` and
    its best checkpoint (the last one when no epoch improved) is scored on
    the test split. A variant that fails is recorded and the suite moves on.

    .. rubric:: Example
    .. code-block:: python

        runner = AblationRunner(RunConfig.parse_file_toml(path), Path("ablate"))
        rows = runner.run("frames", repeats=3)

    """

    def __init__(
        self,
        config: RunConfig,
        out: Path,
        *,
        dataset: Optional[SceneDataset] = None,
        threads: int = 1,
    ) -> None:
        """Instantiate class.

        Args:
            config: Base run configuration; variants change its model section
                and seed only.
            out: Output directory.
            dataset: Already opened dataset (default: open ``config.dataset``).
            threads: Concurrent scenes during test evaluation.

        """
        self.config = config
        self.out = out
        self.dataset = dataset or SceneDataset.open(config.dataset)
        self.threads = threads

    @property
    def difficulty(self) -> str:
        """Difficulty the dataset was generated with."""
        return self.dataset.manifest.difficulty

    def run_variant(self, suite: str, variant: Variant, seed: int) -> AblationRow:
        """Train and score one variant with one seed."""
        row = AblationRow(
            suite=suite, variant=variant.name, seed=seed, difficulty=self.difficulty
        )
        run_dir = self.out / suite / variant.name / f"seed-{seed}"
        try:
            model = variant.model_config(self.config.model)
            if model.frames > self.dataset.manifest.frames:
                raise ConfigurationError(
                    f"{model.frames} frames requested; the dataset has "
                    f"{self.dataset.manifest.frames}"
                )
            config = self.config.copy(update={"model": model, "seed": seed})
            trainer = Trainer(config, run_dir, dataset=self.dataset)
            trainer.run()
            checkpoint = trainer.run_dir.checkpoint("best")
            if not checkpoint.is_file():
                checkpoint = trainer.run_dir.checkpoint("last")
            network = load_model(
                checkpoint, model, len(self.dataset.vocabulary), config.dtype
            )
            summary = evaluate(
                self.dataset,
                self.dataset.split("test"),
                ModelPredictor(network, config.dtype),
                threads=self.threads,
            ).summary
        except (WildgroundError, ValidationError) as exc:
            LOGGER.error("%s/%s seed %d failed: %s", suite, variant.name, seed, exc)
            return row.copy(update={"status": "failed", "error": str(exc)})
        LOGGER.info(
            "%s/%s seed %d: Acc@0.25 %.4f, Acc@0.5 %.4f, mIoU %.4f",
            suite,
            variant.name,
            seed,
            summary.acc_025,
            summary.acc_05,
            summary.miou,
        )
        return row.copy(
            update={
                "acc_025": summary.acc_025,
                "acc_05": summary.acc_05,
                "miou": summary.miou,
            }
        )

    def run(self, suite: AblationSuite, repeats: int = 3) -> List[AblationRow]:
        """Run every variant of ``suite`` ``repeats`` times and write the tables.

        Raises:
            ConfigurationError: Unknown suite or fewer than one repeat.

        """
        if repeats < 1:
            raise ConfigurationError("repeats must be at least 1")
        variants = suite_variants(suite)
        LOGGER.info(
            "ablation %s: %d variants x %d seeds", suite, len(variants), repeats
        )
        rows = [
            self.run_variant(name, variant, self.config.seed + repeat)
            for name, variant in variants
            for repeat in range(repeats)
        ]
        self.out.mkdir(parents=True, exist_ok=True)
        write_rows([row.dict() for row in rows], self.out / ROWS_NAME, ROW_COLUMNS)
        write_rows(summarize_rows(rows), self.out / TABLE_NAME, TABLE_COLUMNS)
        failed = sum(row.status == "failed" for row in rows)
        LOGGER.notice(
            "ablation %s finished: %d runs, %d failed", suite, len(rows), failed
        )
        return rows


def mean_std(values: List[float]) -> Tuple[Optional[float], Optional[float]]:
    """Mean and sample standard deviation; the deviation of one value is 0."""
    if not values:
        return None, None
    if len(values) == 1:
        return values[0], 0.0
    return float(np.mean(values)), float(np.std(values, ddof=1))


def summarize_rows(rows: List[AblationRow]) -> List[Dict[str, Any]]:
    """One table line per ``(suite, variant)`` in first-seen order."""
    groups: Dict[Tuple[str, str], List[AblationRow]] = {}
    for row in rows:
        groups.setdefault((row.suite, row.variant), []).append(row)
    table = []
    for (suite, variant), members in groups.items():
        done = [row for row in members if row.status == "ok"]
        line: Dict[str, Any] = {
            "suite": suite,
            "variant": variant,
            "runs": len(done),
            "failed": len(members) - len(done),
        }
        for metric in METRICS:
            mean, std = mean_std([getattr(row, metric) for row in done])
            line[f"{metric}_mean"] = mean
            line[f"{metric}_std"] = std
        table.append(line)
    return table
