"""High-level exceptions."""
from __future__ import annotations

from typing import TYPE_CHECKING, Any, Dict, Iterable, Optional, Sequence, Tuple

if TYPE_CHECKING:
    from pathlib import Path


class WildgroundError(Exception):
    """Base class for custom exceptions raised by wildground."""

    message: str
    """Error message."""

    def __init__(self, *args: Any) -> None:
        """Instantiate class.

        Subclasses set ``message`` before calling this method. Otherwise the
        first positional argument is used.

        """
        if not hasattr(self, "message"):
            self.message = str(args[0]) if args else self.__class__.__name__
        super().__init__(self.message, *args[1:])

    def __str__(self) -> str:
        """Return the error message."""
        return self.message


class ConfigurationError(WildgroundError):
    """Inconsistent configuration values."""

    reason: str

    def __init__(self, reason: str) -> None:
        """Instantiate class.

        Args:
            reason: What is inconsistent.

        """
        self.reason = reason
        self.message = f"invalid configuration: {reason}"
        super().__init__()


class DimensionError(WildgroundError):
    """Operand shapes are incompatible with an operation."""

    op: str
    """Name of the operation."""

    shapes: Tuple[Tuple[int, ...], ...]
    """Shapes of the operands."""

    def __init__(self, op: str, *shapes: Sequence[int], detail: str = "") -> None:
        """Instantiate class.

        Args:
            op: Name of the operation.
            shapes: Shapes of the operands involved.
            detail: Additional explanation.

        """
        self.op = op
        self.shapes = tuple(tuple(int(i) for i in shape) for shape in shapes)
        self.message = f"{op}: incompatible shapes " + " vs ".join(
            str(shape) for shape in self.shapes
        )
        if detail:
            self.message += f" ({detail})"
        super().__init__()


class NonFiniteError(WildgroundError):
    """An operation produced NaN or Inf from its inputs."""

    op: str

    def __init__(self, op: str) -> None:
        """Instantiate class.

        Args:
            op: Name of the operation that produced non-finite values.

        """
        self.op = op
        self.message = f"{op} produced non-finite values"
        super().__init__()


class TapeError(WildgroundError):
    """Invalid use of the operation tape."""

    reason: str

    def __init__(self, reason: str) -> None:
        """Instantiate class."""
        self.reason = reason
        self.message = f"tape error: {reason}"
        super().__init__()


class MissingGradientError(WildgroundError):
    """A registered parameter did not receive a gradient."""

    name: str

    def __init__(self, name: str) -> None:
        """Instantiate class.

        Args:
            name: Name of the parameter.

        """
        self.name = name
        self.message = f"parameter {name} has no gradient; run backward before step"
        super().__init__()


class CheckpointFormatError(WildgroundError):
    """File is not a checkpoint this version can read."""

    path: Optional[Path]
    reason: str

    def __init__(self, path: Optional[Path], reason: str) -> None:
        """Instantiate class."""
        self.path = path
        self.reason = reason
        self.message = f"invalid checkpoint {path or '<bytes>'}: {reason}"
        super().__init__()


class CheckpointTruncatedError(CheckpointFormatError):
    """Checkpoint ended before all declared records were read."""

    def __init__(self, path: Optional[Path]) -> None:
        """Instantiate class."""
        super().__init__(path, "file is truncated")


class CheckpointMismatchError(WildgroundError):
    """Checkpoint contents do not fit the receiving model or optimizer."""

    name: str
    expected: Tuple[int, ...]
    actual: Tuple[int, ...]

    def __init__(
        self,
        name: str,
        expected: Sequence[int] = (),
        actual: Sequence[int] = (),
        *,
        missing: bool = False,
    ) -> None:
        """Instantiate class.

        Args:
            name: Name of the record.
            expected: Shape required by the receiver.
            actual: Shape stored in the checkpoint.
            missing: The record is absent from the checkpoint.

        """
        self.name = name
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        if missing:
            self.message = f"checkpoint is missing {name}"
        else:
            self.message = (
                f"checkpoint record {name} has shape {self.actual}, "
                f"expected {self.expected}"
            )
        super().__init__()


class EmptyPointCloudError(WildgroundError):
    """Point cloud has no points."""

    def __init__(self) -> None:
        """Instantiate class."""
        self.message = "point cloud is empty"
        super().__init__()


class UnknownTokenError(WildgroundError):
    """Token is not part of the vocabulary."""

    token: str

    def __init__(self, token: Any) -> None:
        """Instantiate class.

        Args:
            token: The word or id that could not be resolved.

        """
        self.token = str(token)
        self.message = f"unknown token {token!r}"
        super().__init__()


class VocabularyFileError(WildgroundError):
    """Vocabulary file violates its format."""

    path: Optional[Path]
    reason: str

    def __init__(self, path: Optional[Path], reason: str) -> None:
        """Instantiate class."""
        self.path = path
        self.reason = reason
        self.message = f"invalid vocabulary {path or '<lines>'}: {reason}"
        super().__init__()


class VocabularyCoverageError(WildgroundError):
    """Test split words are not covered by the training split."""

    words: Tuple[str, ...]

    def __init__(self, words: Iterable[str]) -> None:
        """Instantiate class.

        Args:
            words: Test words seen fewer than twice in the training split.

        """
        self.words = tuple(sorted(words))
        self.message = (
            "test split words appear fewer than twice in the training split: "
            + ", ".join(self.words)
        )
        super().__init__()


class MissingSpanError(WildgroundError):
    """Utterance lacks a span the loss or target selection requires."""

    role: str

    def __init__(self, role: str) -> None:
        """Instantiate class.

        Args:
            role: Role of the missing span (``target`` or ``terminal``).

        """
        self.role = role
        self.message = f"utterance has no {role} span"
        super().__init__()


class EmptyRecordsError(WildgroundError):
    """Metric requested over an empty record set."""

    metric: str

    def __init__(self, metric: str) -> None:
        """Instantiate class."""
        self.metric = metric
        self.message = f"{metric} is undefined for an empty record set"
        super().__init__()


class SceneFormatError(WildgroundError):
    """Scene file cannot be decoded."""

    path: Optional[Path]
    reason: str

    def __init__(self, path: Optional[Path], reason: str) -> None:
        """Instantiate class."""
        self.path = path
        self.reason = reason
        self.message = f"invalid scene file {path or '<bytes>'}: {reason}"
        super().__init__()


class SceneVersionError(SceneFormatError):
    """Scene file was written by an unsupported format version."""

    expected: int
    actual: int

    def __init__(self, path: Optional[Path], expected: int, actual: int) -> None:
        """Instantiate class."""
        self.expected = expected
        self.actual = actual
        super().__init__(path, f"format version {actual}, expected {expected}")


class SceneTruncatedError(SceneFormatError):
    """Scene file ends before its declared blocks and checksum."""

    def __init__(self, path: Optional[Path]) -> None:
        """Instantiate class."""
        super().__init__(path, "file is truncated")


class SceneChecksumError(SceneFormatError):
    """Scene file body does not match its CRC32."""

    expected: int
    actual: int

    def __init__(self, path: Optional[Path], expected: int, actual: int) -> None:
        """Instantiate class."""
        self.expected = expected
        self.actual = actual
        super().__init__(
            path,
            f"checksum mismatch (stored {expected:#010x}, computed {actual:#010x})",
        )


class InvalidSceneError(WildgroundError):
    """Scene violates an invariant and will not be written."""

    reason: str

    def __init__(self, reason: str) -> None:
        """Instantiate class."""
        self.reason = reason
        self.message = f"invalid scene: {reason}"
        super().__init__()


class NonFiniteLossError(WildgroundError):
    """Training produced a NaN or Inf loss."""

    step: int
    parts: Dict[str, float]

    def __init__(self, step: int, parts: Optional[Dict[str, float]] = None) -> None:
        """Instantiate class.

        Args:
            step: Optimizer step at which the loss became non-finite.
            parts: Loss terms that were computed, if any.

        """
        self.step = step
        self.parts = dict(parts or {})
        self.message = f"non-finite loss at step {step}; last good checkpoint retained"
        super().__init__()


class ManifestError(WildgroundError):
    """Dataset manifest is malformed or inconsistent."""

    path: Optional[Path]
    reason: str

    def __init__(self, path: Optional[Path], reason: str) -> None:
        """Instantiate class."""
        self.path = path
        self.reason = reason
        self.message = f"invalid dataset manifest {path or '<text>'}: {reason}"
        super().__init__()


class GradientCheckFailedError(WildgroundError):
    """Analytic gradients disagree with finite differences."""

    failures: Tuple[str, ...]
    """Names of the cases above tolerance."""

    def __init__(self, failures: Iterable[str]) -> None:
        """Instantiate class.

        Args:
            failures: Names of the failing cases.

        """
        self.failures = tuple(failures)
        self.message = (
            f"{len(self.failures)} gradient check(s) failed: {', '.join(self.failures)}"
        )
        super().__init__()
