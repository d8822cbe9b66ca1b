"""``wildground`` command line interface."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, cast, get_args

import click
from pydantic import ValidationError

from wildground import __version__
from wildground._logging import setup_logging
from wildground.autodiff.functional import DIFFERENTIABLE_OPS
from wildground.constants import SCENE_SUFFIX
from wildground.exceptions import GradientCheckFailedError, WildgroundError
from wildground.geometry.iou import rotated_iou_3d
from wildground.models.config import RunConfig, threads_from_env
from wildground.synthscenes import SceneDataset, build_dataset, collate
from wildground.synthscenes.dataset import MANIFEST_NAME
from wildground.training import (
    AblationRunner,
    ModelPredictor,
    Trainer,
    evaluate,
    find_config,
    load_model,
    make_predictor,
    run_suite,
    uncovered_ops,
    write_evaluation,
)
from wildground.training.ablation import TABLE_NAME
from wildground.type_defs import (
    AblationSuite,
    Difficulty,
    GradcheckScope,
    Predictor,
    Split,
)

if TYPE_CHECKING:
    from wildground._logging import WildgroundLogger
    from wildground.geometry.boxes import Box3D

LOGGER = cast("WildgroundLogger", logging.getLogger("wildground.cli"))

PATH = click.Path(path_type=Path)
EXISTING_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


class WildgroundGroup(click.Group):
    """Command group that turns library errors into a clean exit status 1."""

    def invoke(self, ctx: click.Context) -> Any:
        """Invoke the selected command."""
        try:
            return super().invoke(ctx)
        except WildgroundError as exc:
            LOGGER.debug("command failed", exc_info=True)
            raise click.ClickException(exc.message) from exc


def load_config(path: Path, **overrides: Any) -> RunConfig:
    """Parse a run config file, applying command line overrides.

    Raises:
        click.ClickException: The file does not describe a valid run.

    """
    try:
        config = RunConfig.parse_file_toml(path)
        if overrides:
            data = {k: v for k, v in overrides.items() if v is not None}
            config = RunConfig.parse_obj(
                {**config.dict(by_alias=True), "base_dir": config.base_dir, **data}
            )
    except (ValidationError, ValueError) as exc:
        raise click.ClickException(f"invalid config {path}:\n{exc}") from exc
    return config


def format_box(box: Box3D) -> str:
    """One-line rendering of a box."""
    return " ".join(
        f"{name}={getattr(box, name):.3f}"
        for name in ("x", "y", "z", "l", "w", "h", "theta")
    )


@click.group(
    cls=WildgroundGroup, context_settings={"help_option_names": ["-h", "--help"]}
)
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Increase log output (-v per step, -vv debug).",
)
@click.version_option(__version__, prog_name="wildground")
def cli(verbose: int) -> None:
    """3D visual grounding in dynamic desk-scale scenes."""
    setup_logging(verbose)


@cli.command()
@click.option("--out", required=True, type=PATH, help="Dataset directory.")
@click.option(
    "--train", "n_train", default=500, show_default=True, help="Train scenes."
)
@click.option("--test", "n_test", default=125, show_default=True, help="Test scenes.")
@click.option("--seed", default=0, show_default=True, help="Master seed.")
@click.option(
    "--difficulty",
    type=click.Choice(get_args(Difficulty)),
    default="default",
    show_default=True,
    help="Attributes utterances may mention.",
)
@click.option("--frames", default=2, show_default=True, help="Frames per scene.")
def generate(
    out: Path, n_train: int, n_test: int, seed: int, difficulty: Difficulty, frames: int
) -> None:
    """Generate a synthetic dataset and its manifest."""
    manifest = build_dataset(
        out,
        n_train,
        n_test,
        seed,
        difficulty,
        frames=frames,
        threads=threads_from_env(),
    )
    vocabulary = SceneDataset.open(out / MANIFEST_NAME).vocabulary
    click.echo(f"train scenes: {manifest.n_train}")
    click.echo(f"test scenes: {manifest.n_test}")
    click.echo(f"vocabulary: {len(vocabulary)} words")
    click.echo(f"manifest: {out / MANIFEST_NAME}")


@cli.command()
@click.option("--config", "config_path", required=True, type=EXISTING_FILE)
@click.option("--out", required=True, type=PATH, help="Run directory.")
@click.option("--resume", type=EXISTING_FILE, help="Checkpoint to continue from.")
@click.option("--epochs", type=int, help="Override the configured epochs.")
@click.option("--max-scenes", type=int, help="Train on at most this many scenes.")
@click.option("--seed", type=int, help="Override the configured seed.")
def train(
    config_path: Path,
    out: Path,
    resume: Optional[Path],
    epochs: Optional[int],
    max_scenes: Optional[int],
    seed: Optional[int],
) -> None:
    """Train a grounding model."""
    config = load_config(config_path, epochs=epochs, max_scenes=max_scenes, seed=seed)
    trainer = Trainer(config, out)
    if resume:
        trainer.resume(resume)
    report = trainer.run()
    click.echo(f"steps: {report.steps}")
    click.echo(f"best epoch: {report.best_epoch}")
    if report.summary is not None:
        click.echo(f"val Acc@0.25: {report.summary.acc_025:.4f}")
    click.echo(f"report: {trainer.run_dir.report_path}")


@cli.command(name="eval")
@click.option("--checkpoint", type=EXISTING_FILE, help="Model checkpoint.")
@click.option("--dataset", required=True, type=EXISTING_FILE, help="Manifest.")
@click.option(
    "--config",
    "config_path",
    type=EXISTING_FILE,
    help="Run config (default: the one saved next to the checkpoint).",
)
@click.option("--out", required=True, type=PATH, help="Output directory.")
@click.option(
    "--predictor",
    type=click.Choice(get_args(Predictor)),
    default="model",
    show_default=True,
)
@click.option(
    "--split", type=click.Choice(get_args(Split)), default="test", show_default=True
)
@click.option("--batch-size", default=1, show_default=True, help="Scenes per call.")
@click.option("--seed", default=0, show_default=True, help="Random predictor seed.")
def evaluate_command(
    checkpoint: Optional[Path],
    dataset: Path,
    config_path: Optional[Path],
    out: Path,
    predictor: Predictor,
    split: Split,
    batch_size: int,
    seed: int,
) -> None:
    """Score a checkpoint, the symbolic oracle or random boxes."""
    scenes = SceneDataset.open(dataset)
    model = None
    dtype = "float32"
    if predictor == "model" and checkpoint is not None:
        config_path = config_path or find_config(checkpoint)
        if config_path is None:
            raise click.UsageError(
                f"no config.toml found next to {checkpoint}; pass --config"
            )
        config = load_config(config_path)
        dtype = config.dtype
        model = load_model(checkpoint, config.model, len(scenes.vocabulary), dtype)
    result = evaluate(
        scenes,
        scenes.split(split),
        make_predictor(
            predictor, model=model, vocabulary=scenes.vocabulary, seed=seed, dtype=dtype
        ),
        batch_size=batch_size,
        threads=threads_from_env(),
    )
    summary_path, _ = write_evaluation(result, out)
    summary = result.summary
    click.echo(f"Acc@0.25: {summary.acc_025:.4f}")
    click.echo(f"Acc@0.5: {summary.acc_05:.4f}")
    click.echo(f"mIoU: {summary.miou:.4f}")
    if summary.latency_ms is not None:
        click.echo(f"latency: {summary.latency_ms:.2f} ms/scene")
    click.echo(f"summary: {summary_path}")


def _scene_path(scenes: SceneDataset, scene: str) -> Path:
    candidate = Path(scene)
    if candidate.is_file():
        return candidate
    for path in scenes.manifest.paths("train") + scenes.manifest.paths("test"):
        if path.stem == scene or path.name == f"{scene}{SCENE_SUFFIX}":
            return path
    raise click.BadParameter(f"no scene {scene!r} in the dataset", param_hint="--scene")


@cli.command()
@click.option("--checkpoint", required=True, type=EXISTING_FILE)
@click.option("--dataset", required=True, type=EXISTING_FILE, help="Manifest.")
@click.option("--scene", required=True, help="Scene file or scene id.")
@click.option("--config", "config_path", type=EXISTING_FILE, help="Run config.")
def infer(
    checkpoint: Path, dataset: Path, scene: str, config_path: Optional[Path]
) -> None:
    """Ground the utterance of a single scene."""
    scenes = SceneDataset.open(dataset)
    config_path = config_path or find_config(checkpoint)
    if config_path is None:
        raise click.UsageError(
            f"no config.toml found next to {checkpoint}; pass --config"
        )
    config = load_config(config_path)
    model = load_model(checkpoint, config.model, len(scenes.vocabulary), config.dtype)
    sample = scenes[_scene_path(scenes, scene)]
    prediction = ModelPredictor(model, config.dtype).predict(
        collate([sample], scenes.vocabulary)
    )[0]
    click.echo(f"utterance: {' '.join(sample.words(scenes.vocabulary))}")
    click.echo(f"query: {prediction.query_index}")
    click.echo(f"box: {format_box(prediction.box)}")
    iou = rotated_iou_3d(prediction.box, sample.gt_box)
    click.echo(f"IoU with annotation: {iou:.4f}")


@cli.command()
@click.option(
    "--scope",
    type=click.Choice(get_args(GradcheckScope)),
    default="all",
    show_default=True,
)
@click.option("--instances", type=int, help="Random instances per case.")
@click.option("--seed", default=0, show_default=True)
def gradcheck(scope: GradcheckScope, instances: Optional[int], seed: int) -> None:
    """Compare analytic gradients with central finite differences."""
    results = run_suite(scope, instances=instances, seed=seed)
    for result in results:
        status = "ok" if result.passed else "FAILED"
        click.echo(
            f"{result.name:<28} {result.scope:<9} {result.max_error:.3e} {status}"
        )
    if scope in ("core", "all"):
        missing = uncovered_ops()
        total = len(DIFFERENTIABLE_OPS)
        click.echo(f"covered {total - len(missing)}/{total} differentiable operations")
    failures = [result.name for result in results if not result.passed]
    if failures:
        raise GradientCheckFailedError(failures)


@cli.command()
@click.option(
    "--suite",
    type=click.Choice(get_args(AblationSuite)),
    default="all",
    show_default=True,
)
@click.option("--config", "config_path", required=True, type=EXISTING_FILE)
@click.option("--out", required=True, type=PATH, help="Output directory.")
@click.option("--repeats", default=3, show_default=True, help="Seeds per variant.")
@click.option("--epochs", type=int, help="Override the configured epochs.")
def ablate(
    suite: AblationSuite,
    config_path: Path,
    out: Path,
    repeats: int,
    epochs: Optional[int],
) -> None:
    """Train and score the variants of an ablation suite."""
    runner = AblationRunner(
        load_config(config_path, epochs=epochs), out, threads=threads_from_env()
    )
    rows = runner.run(suite, repeats)
    failed = sum(row.status == "failed" for row in rows)
    click.echo(f"runs: {len(rows)} ({failed} failed)")
    click.echo(f"table: {out / TABLE_NAME}")
