"""Test wildground.training.ablation."""
# pylint: disable=no-self-use,redefined-outer-name
from __future__ import annotations

import csv
from typing import TYPE_CHECKING, Any, List

import pytest

from wildground.exceptions import ConfigurationError
from wildground.models.reports import AblationRow
from wildground.training.ablation import (
    ROW_COLUMNS,
    SUITES,
    TABLE_COLUMNS,
    AblationRunner,
    Variant,
    mean_std,
    suite_variants,
    summarize_rows,
)

from ...factories import tiny_model_config, tiny_run_config

if TYPE_CHECKING:
    from pathlib import Path

    from pytest_mock import MockerFixture

    from wildground.models.config import RunConfig
    from wildground.synthscenes import SceneDataset

MODULE = "wildground.training.ablation"


@pytest.fixture(scope="module")
def smoke_config(tiny_manifest: Path) -> RunConfig:
    """One step of training."""
    return tiny_run_config(tiny_manifest, epochs=1, max_scenes=4)


def make_row(variant: str, seed: int, acc: float, status: str = "ok") -> AblationRow:
    """Row with all three metrics equal to ``acc``."""
    metrics = {} if status == "failed" else {"acc_025": acc, "acc_05": acc, "miou": acc}
    return AblationRow(
        suite="frames",
        variant=variant,
        seed=seed,
        difficulty="default",
        status=status,
        **metrics,
    )


def read_csv(path: Path) -> List[Any]:
    """Rows of a CSV file as dictionaries."""
    with path.open(newline="") as handle:
        return list(csv.DictReader(handle))


class TestVariant:
    """Test Variant."""

    def test_model_config(self) -> None:
        """Test preset switches and overrides on top of the base widths."""
        config = Variant("frames-3", "dve", {"frames": 3}).model_config(
            tiny_model_config()
        )
        assert config.dim == 24
        assert config.frames == 3
        assert config.use_dve
        assert not config.use_images

    def test_baseline(self) -> None:
        """Test the baseline preset overrides the base switches."""
        config = Variant("baseline", "baseline").model_config(tiny_model_config())
        assert (config.frames, config.use_dve, config.use_images) == (1, False, False)


class TestSuiteVariants:
    """Test suite_variants."""

    def test_suite(self) -> None:
        """Test one suite in declaration order."""
        assert [v.name for _, v in suite_variants("frames")] == [
            "frames-1",
            "frames-2",
            "frames-3",
            "frames-4",
        ]

    def test_components(self) -> None:
        """Test every component preset runs with one, two and three frames."""
        pairs = suite_variants("components")
        assert len(pairs) == 9
        cells = {(v.preset, v.overrides["frames"]) for _, v in pairs}
        assert cells == {
            (preset, k) for preset in ("baseline", "dve", "full") for k in (1, 2, 3)
        }
        assert pairs[-1][1].name == "dve+tfi-k3"
        config = pairs[-1][1].model_config(tiny_model_config())
        assert (config.frames, config.use_dve, config.use_images) == (3, True, True)

    def test_all(self) -> None:
        """Test every suite."""
        pairs = suite_variants("all")
        assert len(pairs) == sum(len(v) for v in SUITES.values())
        assert pairs[0] == ("components", SUITES["components"][0])

    def test_unknown(self) -> None:
        """Test a suite that does not exist."""
        with pytest.raises(ConfigurationError, match="unknown ablation suite"):
            suite_variants("decoder")  # type: ignore


class TestSummaries:
    """Test table aggregation."""

    @pytest.mark.parametrize(
        "values, expected",
        [([], (None, None)), ([0.5], (0.5, 0.0)), ([0.2, 0.4], (0.3, 0.02**0.5))],
    )
    def test_mean_std(self, expected: Any, values: List[float]) -> None:
        """Test mean and sample deviation."""
        mean, std = mean_std(values)
        if expected[0] is None:
            assert (mean, std) == expected
        else:
            assert mean == pytest.approx(expected[0])
            assert std == pytest.approx(expected[1])

    def test_summarize_rows(self) -> None:
        """Test failed runs are counted and left out of the statistics."""
        rows = [
            make_row("frames-1", 0, 0.2),
            make_row("frames-2", 0, 0.5),
            make_row("frames-1", 1, 0.4),
            make_row("frames-2", 1, 0.0, status="failed"),
        ]
        table = summarize_rows(rows)
        assert [line["variant"] for line in table] == ["frames-1", "frames-2"]
        assert (table[0]["runs"], table[0]["failed"]) == (2, 0)
        assert table[0]["acc_025_mean"] == pytest.approx(0.3)
        assert (table[1]["runs"], table[1]["failed"]) == (1, 1)
        assert table[1]["miou_std"] == 0.0

    def test_all_failed(self) -> None:
        """Test a variant without a successful run."""
        (line,) = summarize_rows([make_row("frames-4", 0, 0.0, status="failed")])
        assert line["runs"] == 0
        assert line["acc_05_mean"] is None


class TestAblationRunner:
    """Test AblationRunner."""

    def test_run_variant(
        self, smoke_config: RunConfig, tiny_dataset: SceneDataset, tmp_path: Path
    ) -> None:
        """Test a variant is trained and scored on the test split."""
        runner = AblationRunner(smoke_config, tmp_path, dataset=tiny_dataset)
        row = runner.run_variant("components", Variant("baseline", "baseline"), 4)
        assert row.status == "ok"
        assert (row.suite, row.variant, row.seed) == ("components", "baseline", 4)
        assert row.difficulty == "default"
        assert row.acc_025 is not None and 0 <= row.acc_025 <= 1
        assert row.miou is not None
        run_dir = tmp_path / "components" / "baseline" / "seed-4"
        assert (run_dir / "report.json").is_file()

    def test_run_variant_too_many_frames(
        self, smoke_config: RunConfig, tiny_dataset: SceneDataset, tmp_path: Path
    ) -> None:
        """Test a variant the dataset cannot feed is recorded as failed."""
        runner = AblationRunner(smoke_config, tmp_path, dataset=tiny_dataset)
        row = runner.run_variant("frames", Variant("frames-3", "dve", {"frames": 3}), 0)
        assert row.status == "failed"
        assert row.error == (
            "invalid configuration: 3 frames requested; the dataset has 2"
        )
        assert row.acc_025 is None
        assert not (tmp_path / "frames").exists()

    def test_run(
        self,
        mocker: MockerFixture,
        smoke_config: RunConfig,
        tiny_dataset: SceneDataset,
        tmp_path: Path,
    ) -> None:
        """Test seeds, row order and the written tables."""
        runner = AblationRunner(
            smoke_config.copy(update={"seed": 10}), tmp_path, dataset=tiny_dataset
        )
        mock_variant = mocker.patch.object(
            runner,
            "run_variant",
            side_effect=lambda suite, variant, seed: make_row(
                variant.name, seed, 0.1 * (seed - 9)
            ),
        )
        rows = runner.run("temporal", repeats=2)
        assert [(r.variant, r.seed) for r in rows] == [
            ("dve", 10),
            ("dve", 11),
            ("input-concat", 10),
            ("input-concat", 11),
            ("feature-concat", 10),
            ("feature-concat", 11),
        ]
        assert mock_variant.call_count == 6
        written = read_csv(tmp_path / "rows.csv")
        assert tuple(written[0]) == ROW_COLUMNS
        assert written[0]["error"] == ""
        table = read_csv(tmp_path / "table.csv")
        assert tuple(table[0]) == TABLE_COLUMNS
        assert [line["variant"] for line in table] == [
            "dve",
            "input-concat",
            "feature-concat",
        ]
        assert float(table[0]["acc_025_mean"]) == pytest.approx(0.15)

    def test_run_no_repeats(
        self, smoke_config: RunConfig, tiny_dataset: SceneDataset, tmp_path: Path
    ) -> None:
        """Test at least one repeat is needed."""
        runner = AblationRunner(smoke_config, tmp_path, dataset=tiny_dataset)
        with pytest.raises(ConfigurationError, match="repeats must be at least 1"):
            runner.run("fusion", repeats=0)
