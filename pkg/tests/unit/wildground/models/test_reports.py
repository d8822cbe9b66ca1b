"""Test wildground.models.reports."""
# pylint: disable=no-self-use
from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from wildground.models.reports import (
    AblationRow,
    EvalSummary,
    GradientCheckResult,
    LossBreakdown,
    RunReport,
)

from ...factories import make_box, make_eval_record

MODULE = "wildground.models.reports"


class TestLossBreakdown:
    """Test LossBreakdown."""

    def test_aliases(self) -> None:
        """Test the training log columns."""
        obj = LossBreakdown(confidence=1, giou=2, box=3, contrastive=4, soft_token=5)
        assert list(obj.dict(by_alias=True)) == [
            "L_s",
            "L_giou",
            "L_box",
            "L_c",
            "L_st",
            "total",
        ]
        assert obj.parts() == [1, 2, 3, 4, 5]

    def test_negative(self) -> None:
        """Test a negative term."""
        with pytest.raises(ValidationError) as excinfo:
            LossBreakdown(L_s=-1, L_giou=0, L_box=0, L_c=0, L_st=0)
        assert excinfo.value.errors()[0]["loc"] == ("L_s",)

    def test_not_finite(self) -> None:
        """Test a non-finite total."""
        with pytest.raises(ValidationError, match="not finite"):
            LossBreakdown(L_s=0, L_giou=0, L_box=0, L_c=0, L_st=0, total=math.nan)


class TestEvalRecord:
    """Test EvalRecord."""

    def test_success(self) -> None:
        """Test the threshold is inclusive."""
        record = make_eval_record(0.25)
        assert record.success(0.25)
        assert not record.success(0.5)

    def test_iou_range(self) -> None:
        """Test an IoU above one."""
        with pytest.raises(ValidationError, match="outside"):
            make_eval_record(1.5)

    def test_json(self) -> None:
        """Test boxes serialize with their fields."""
        data = make_eval_record(0.5, "s7", 3).dict()
        assert data["predicted"] == make_box().dict()
        assert data["query_index"] == 3


class TestEvalSummary:
    """Test EvalSummary."""

    def test_order(self) -> None:
        """Test the strict threshold cannot score higher."""
        with pytest.raises(ValidationError, match="acc_05 cannot exceed acc_025"):
            EvalSummary(acc_025=0.2, acc_05=0.3, miou=0.1, n_samples=10)

    def test_rows(self) -> None:
        """Test unset metrics are left out of the summary rows."""
        rows = EvalSummary(acc_025=0.5, acc_05=0.25, miou=0.3, n_samples=4).rows()
        assert rows == [
            {"metric": "acc_025", "value": 0.5},
            {"metric": "acc_05", "value": 0.25},
            {"metric": "miou", "value": 0.3},
            {"metric": "n_samples", "value": 4},
            {"metric": "precision_defined", "value": True},
        ]


def test_run_report_defaults() -> None:
    """Test RunReport field defaults."""
    report = RunReport(build_id="0.1.0", seed=1, dataset="m.txt", config={})
    assert report.loss_curve == []
    assert report.best_epoch is None
    assert not report.aborted


def test_ablation_row_status() -> None:
    """Test AblationRow only knows two statuses."""
    assert AblationRow(suite="s", variant="v", seed=0, difficulty="all").status == "ok"
    with pytest.raises(ValidationError):
        AblationRow(suite="s", variant="v", seed=0, difficulty="all", status="skip")


@pytest.mark.parametrize("error, passed", [(1e-5, True), (1e-4, True), (2e-4, False)])
def test_gradient_check_passed(error: float, passed: bool) -> None:
    """Test GradientCheckResult.passed includes the tolerance."""
    result = GradientCheckResult(
        name="matmul", scope="op", instances=5, max_error=error, tolerance=1e-4
    )
    assert result.passed is passed
