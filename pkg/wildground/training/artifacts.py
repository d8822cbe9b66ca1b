"""Run directory layout and the CSV files written into it.

Numbers are written with :func:`repr` so every float reads back bit for bit.

"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from types import TracebackType
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    TextIO,
    Type,
    cast,
)

from ..constants import CHECKPOINT_SUFFIX
from ..geometry.boxes import Box3D
from ..models.reports import EvalRecord, EvalSummary, RunReport

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..models.reports import LossBreakdown
    from ..type_defs import LossRowTypedDict

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

LOSS_COLUMNS = ("step", "L_s", "L_giou", "L_box", "L_c", "L_st", "total")
BOX_FIELDS = ("x", "y", "z", "l", "w", "h", "theta")
RECORD_COLUMNS = (
    "scene_id",
    "iou",
    "aabb_iou",
    "success@0.25",
    "success@0.5",
    "query_index",
    *(f"pred_{name}" for name in BOX_FIELDS),
    *(f"gt_{name}" for name in BOX_FIELDS),
)
SUMMARY_COLUMNS = ("metric", "value")


class RunDirectory:
    """Files of one training run.

    .. code-block:: text

        <root>/
            config.toml
            loss.csv
            report.json
            checkpoints/
                epoch-005.wgckpt
                best.wgckpt
                last.wgckpt

    """

    CONFIG = "config.toml"
    LOSS_LOG = "loss.csv"
    REPORT = "report.json"
    CHECKPOINTS = "checkpoints"

    def __init__(self, root: Path) -> None:
        """Instantiate class."""
        self.root = root

    def create(self) -> RunDirectory:
        """Create the directory tree."""
        (self.root / self.CHECKPOINTS).mkdir(parents=True, exist_ok=True)
        return self

    @property
    def config_path(self) -> Path:
        """Echo of the run configuration."""
        return self.root / self.CONFIG

    @property
    def loss_log(self) -> Path:
        """Per-step loss terms."""
        return self.root / self.LOSS_LOG

    @property
    def report_path(self) -> Path:
        """The :class:`~wildground.models.reports.RunReport`."""
        return self.root / self.REPORT

    def checkpoint(self, name: str) -> Path:
        """Path of checkpoint ``name`` (``best``, ``last``, ``epoch-005``...)."""
        return self.root / self.CHECKPOINTS / f"{name}{CHECKPOINT_SUFFIX}"

    def write_report(self, report: RunReport) -> Path:
        """Write ``report`` as JSON."""
        self.report_path.write_text(report.json(indent=2) + "\n", encoding="utf-8")
        return self.report_path

    def read_report(self) -> RunReport:
        """Read the report written by :meth:`write_report`."""
        return RunReport.parse_file(self.report_path)


def find_config(checkpoint: Path) -> Optional[Path]:
    """``config.toml`` of the run a checkpoint belongs to, if there is one."""
    for directory in (checkpoint.parent, checkpoint.parent.parent):
        candidate = directory / RunDirectory.CONFIG
        if candidate.is_file():
            return candidate
    return None


def _number(value: Any) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def loss_row(step: int, breakdown: LossBreakdown) -> LossRowTypedDict:
    """Loss log line of one optimizer step."""
    data = breakdown.dict(by_alias=True)
    return cast("LossRowTypedDict", {"step": step, **data})


class LossLog:
    """Append-only CSV of per-step loss terms.

    Opening with ``resume_step`` keeps only the rows up to that step, so a
    resumed run continues the log where its checkpoint left off.

    """

    def __init__(self, path: Path, *, resume_step: Optional[int] = None) -> None:
        """Instantiate class."""
        self.path = path
        self.resume_step = resume_step
        self._file: Optional[TextIO] = None
        self._writer: Optional[csv.DictWriter] = None

    def __enter__(self) -> LossLog:
        """Open the log for appending."""
        kept: List[LossRowTypedDict] = []
        if self.resume_step is not None and self.path.is_file():
            kept = [
                row
                for row in read_loss_log(self.path)
                if row["step"] <= self.resume_step
            ]
        self._file = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.DictWriter(self._file, fieldnames=LOSS_COLUMNS)
        self._writer.writeheader()
        for row in kept:
            self.write(row)
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        """Close the file."""
        if self._file is not None:
            self._file.close()
        self._file = None
        self._writer = None

    def write(self, row: LossRowTypedDict) -> None:
        """Append one row and flush it."""
        if self._writer is None or self._file is None:
            raise RuntimeError("loss log is not open")
        values = cast(Dict[str, Any], row)
        self._writer.writerow({key: _number(values[key]) for key in LOSS_COLUMNS})
        self._file.flush()


def read_loss_log(path: Path) -> List[LossRowTypedDict]:
    """Rows of a loss log."""
    with path.open(newline="", encoding="utf-8") as handle:
        return [
            cast(
                "LossRowTypedDict",
                {
                    key: int(row[key]) if key == "step" else float(row[key])
                    for key in LOSS_COLUMNS
                },
            )
            for row in csv.DictReader(handle)
        ]


def record_row(record: EvalRecord) -> Dict[str, str]:
    """CSV line of one evaluation record."""
    row: Dict[str, Any] = {
        "scene_id": record.scene_id,
        "iou": record.iou,
        "aabb_iou": record.aabb_iou,
        "success@0.25": int(record.success(0.25)),
        "success@0.5": int(record.success(0.5)),
        "query_index": "" if record.query_index is None else record.query_index,
    }
    for prefix, box in (("pred", record.predicted), ("gt", record.ground_truth)):
        for name in BOX_FIELDS:
            row[f"{prefix}_{name}"] = getattr(box, name)
    return {key: _number(value) for key, value in row.items()}


def write_records(records: Iterable[EvalRecord], path: Path) -> Path:
    """Write per-scene records."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=RECORD_COLUMNS)
        writer.writeheader()
        writer.writerows(record_row(record) for record in records)
    return path


def _box(row: Dict[str, str], prefix: str) -> Box3D:
    values = {name: float(row[f"{prefix}_{name}"]) for name in BOX_FIELDS}
    return Box3D.parse_obj(values)


def read_records(path: Path) -> List[EvalRecord]:
    """Records written by :func:`write_records`."""
    with path.open(newline="", encoding="utf-8") as handle:
        return [
            EvalRecord(
                scene_id=row["scene_id"],
                predicted=_box(row, "pred"),
                ground_truth=_box(row, "gt"),
                iou=float(row["iou"]),
                aabb_iou=float(row["aabb_iou"]),
                query_index=int(row["query_index"]) if row["query_index"] else None,
            )
            for row in csv.DictReader(handle)
        ]


def write_summary(summary: EvalSummary, path: Path) -> Path:
    """Write ``metric,value`` rows."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in summary.rows():
            writer.writerow({"metric": row["metric"], "value": _number(row["value"])})
    return path


def read_summary(path: Path) -> EvalSummary:
    """Summary written by :func:`write_summary`."""
    with path.open(newline="", encoding="utf-8") as handle:
        return EvalSummary.parse_obj(
            {row["metric"]: row["value"] for row in csv.DictReader(handle)}
        )


def write_rows(
    rows: Sequence[Dict[str, Any]], path: Path, columns: Sequence[str]
) -> Path:
    """Write dictionaries as CSV with a fixed column order."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    key: "" if row.get(key) is None else _number(row[key])
                    for key in columns
                }
            )
    LOGGER.debug("wrote %d rows to %s", len(rows), path)
    return path


def dump_json(data: Any, path: Path) -> Path:
    """Write ``data`` as indented JSON."""
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return path
