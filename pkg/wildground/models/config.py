"""Configuration data models."""
# pylint: disable=no-self-argument,no-self-use
from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, cast

import tomli
import tomli_w
from pydantic import Extra, Field, root_validator, validator
from typing_extensions import Literal

from ..constants import FEATURE_DIM, PATCH_SIZE, THREADS_ENV_VAR
from ..type_defs import DecoderOrder, FusionOrder, TemporalMode
from .base import BaseModel, check_non_negative, resolve_path_field

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

PresetName = Literal["baseline", "dve", "full"]

MODEL_PRESETS: Dict[str, Dict[str, Any]] = {
    "baseline": {"frames": 1, "use_dve": False, "use_images": False},
    "dve": {"frames": 2, "use_dve": True, "use_images": False},
    "full": {"frames": 2, "use_dve": True, "use_images": True},
}
"""Variant switches of the named model presets."""


class SetAbstractionStage(BaseModel):
    """One sampling/grouping/pooling stage of the point encoder."""

    seeds: int
    """Number of farthest-point-sampled centers."""

    radius: float
    """Ball query radius in meters."""

    neighbors: int = 16
    """Maximum points grouped per center."""

    mlp: List[int]
    """Widths of the shared per-point layers (last one is the output width)."""

    @validator("seeds", "neighbors")
    def _check_positive_int(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("radius")
    def _check_radius(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("radius must be positive")
        return v

    @validator("mlp")
    def _check_mlp(cls, v: List[int]) -> List[int]:
        if not v or any(width <= 0 for width in v):
            raise ValueError("mlp needs at least one positive width")
        return v


class PointEncoderConfig(BaseModel):
    """Set-abstraction encoder layout.

    .. rubric:: Example
    .. code-block:: toml

        [[point_encoder.stages]]
        seeds = 256
        radius = 0.8
        mlp = [32, 64]

    """

    stages: List[SetAbstractionStage] = [
        SetAbstractionStage(seeds=256, radius=0.8, neighbors=16, mlp=[32, 64]),
        SetAbstractionStage(seeds=64, radius=1.6, neighbors=16, mlp=[128, FEATURE_DIM]),
    ]
    """Stages applied in order; each samples its centers from the previous one."""

    @validator("stages")
    def _check_stages(cls, v: List[SetAbstractionStage]) -> List[SetAbstractionStage]:
        if not v:
            raise ValueError("at least one stage is required")
        return v

    @property
    def out_dim(self) -> int:
        """Feature width of the final seeds."""
        return self.stages[-1].mlp[-1]

    @property
    def seeds(self) -> int:
        """Number of final seeds."""
        return self.stages[-1].seeds


class ModelConfig(BaseModel):
    """Grounding network hyperparameters and variant switches.

    A ``preset`` key (``baseline``, ``dve`` or ``full``) fills the variant
    switches; explicitly given keys win over the preset.

    .. rubric:: Example
    .. code-block:: toml

        [model]
        preset = "dve"
        frames = 3

    """

    dim: int = FEATURE_DIM
    """Token width C of every encoder and fusion layer."""

    heads: int = 8
    ffn_dim: int = 256
    dropout: float = 0.1
    dve_layers: int = 1
    tfi_layers: int = 3
    decoder_layers: int = 6
    text_layers: int = 2
    image_layers: int = 2
    patch_size: int = PATCH_SIZE

    frames: int = 2
    """Number of frames K seen by the model (current frame plus K - 1 previous)."""

    queries: int = 16
    """Number of non-parametric decoder queries N."""

    proj_dim: int = 64
    """Width of the shared contrastive space."""

    temperature: float = 0.07

    use_dve: bool = True
    """Apply the dynamic visual encoder (spatial and temporal attention)."""

    use_images: bool = True
    """Fuse image tokens into the point features."""

    fusion: FusionOrder = "ours"
    temporal: TemporalMode = "dve"
    decoder_order: DecoderOrder = "language_first"

    paint_points: bool = False
    """Append projected image color to every point before encoding."""

    share_dve: bool = False
    """Use one set of dynamic visual encoder weights for points and images."""

    point_encoder: PointEncoderConfig = PointEncoderConfig()

    @root_validator(pre=True)
    def _apply_preset(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        values = dict(values)
        preset = values.pop("preset", None)
        if preset is None:
            return values
        if preset not in MODEL_PRESETS:
            raise ValueError(
                f"unknown preset {preset!r}; choose from {', '.join(MODEL_PRESETS)}"
            )
        return {**MODEL_PRESETS[preset], **values}

    @validator(
        "dim",
        "heads",
        "ffn_dim",
        "dve_layers",
        "tfi_layers",
        "decoder_layers",
        "text_layers",
        "image_layers",
        "patch_size",
        "frames",
        "queries",
        "proj_dim",
    )
    def _check_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("dropout")
    def _check_dropout(cls, v: float) -> float:
        if not 0 <= v < 1:
            raise ValueError("dropout must be in [0, 1)")
        return v

    @validator("temperature")
    def _check_temperature(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("temperature must be positive")
        return v

    @root_validator(skip_on_failure=True)
    def _check_consistency(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        dim, heads = values["dim"], values["heads"]
        if dim % heads:
            raise ValueError(f"dim {dim} is not divisible by heads {heads}")
        if dim % 12:
            raise ValueError(
                f"dim {dim} must be divisible by 4 (image positions) "
                "and 6 (seed positions)"
            )
        encoder: PointEncoderConfig = values["point_encoder"]
        if encoder.out_dim != dim:
            raise ValueError(
                f"point encoder output width {encoder.out_dim} differs from dim {dim}"
            )
        if values["queries"] > encoder.seeds:
            raise ValueError(
                f"queries {values['queries']} exceed the {encoder.seeds} point seeds"
            )
        return values

    @classmethod
    def preset(cls, name: PresetName, **overrides: Any) -> ModelConfig:
        """Build a named preset with optional overrides."""
        return cls.parse_obj({"preset": name, **overrides})


class LossWeights(BaseModel):
    """Weights of the five-term objective plus focal and matcher constants."""

    alpha: float = 8.0
    """Weight of the focal confidence loss."""

    beta: float = 1.0
    """Weight of the GIoU loss (also its matcher cost weight)."""

    gamma: float = 5.0
    """Weight of the L1 box loss (also its matcher cost weight)."""

    lambda_: float = Field(1.0, alias="lambda")
    """Weight of the contrastive loss (alias ``lambda``)."""

    mu: float = 0.01
    """Weight of the soft-token loss."""

    focal_alpha: float = 0.25
    focal_gamma: float = 2.0

    match_span: float = 2.0
    """Matcher cost weight of the span cross-entropy."""

    class Config:
        """Model configuration."""

        allow_population_by_field_name = True
        extra = Extra.forbid
        validate_assignment = True

    _check_weights = validator(
        "alpha",
        "beta",
        "gamma",
        "lambda_",
        "mu",
        "focal_alpha",
        "focal_gamma",
        "match_span",
        allow_reuse=True,
    )(check_non_negative)


class RunConfig(BaseModel):
    """Training run configuration.

    .. rubric:: Example
    .. code-block:: toml

        dataset = "data/manifest.txt"
        epochs = 40
        seed = 0

        [model]
        preset = "full"

        [loss]
        alpha = 8

    """

    base_dir: Optional[Path] = Field(None, exclude=True)
    """Directory relative paths are resolved against (the config file's)."""

    dataset: Path
    """Dataset manifest."""

    epochs: int = 40
    batch_size: int = 8

    lr: float = 1e-4
    """Learning rate of every module except the point encoder."""

    point_lr: float = 1e-3
    """Learning rate of the point encoder."""

    weight_decay: float = 5e-4

    lr_decay_at: float = 0.75
    """Fraction of the epochs after which learning rates are multiplied by
    ``lr_decay_factor``."""

    lr_decay_factor: float = 0.1
    seed: int = 0

    checkpoint_every: int = 5
    """Write ``epoch-<n>`` checkpoints every this many epochs."""

    val_fraction: float = 0.1
    """Tail of the train split held out for best-checkpoint selection."""

    max_scenes: Optional[int] = None
    """Use at most this many training scenes (smoke runs)."""

    dtype: Literal["float32", "float64"] = "float32"
    model: ModelConfig = ModelConfig()
    loss: LossWeights = LossWeights()

    _resolve_path_fields = validator("dataset", allow_reuse=True)(resolve_path_field)

    @root_validator(pre=True)
    def _nest_point_encoder(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        values = dict(values)
        if "point_encoder" in values:
            model = dict(values.get("model") or {})
            model.setdefault("point_encoder", values.pop("point_encoder"))
            values["model"] = model
        return values

    @validator("epochs", "batch_size", "checkpoint_every")
    def _check_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("max_scenes")
    def _check_max_scenes(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("lr", "point_lr")
    def _check_lr(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("learning rate must be positive")
        return v

    @validator("lr_decay_at", "val_fraction")
    def _check_fraction(cls, v: float) -> float:
        if not 0 <= v < 1:
            raise ValueError("must be in [0, 1)")
        return v

    _check_decay = validator(
        "weight_decay", "lr_decay_factor", allow_reuse=True
    )(check_non_negative)

    @classmethod
    def parse_file_toml(cls, path: Path) -> RunConfig:
        """Parse a TOML config file; relative paths resolve against its directory."""
        data = tomli.loads(path.read_text())
        data.setdefault("base_dir", path.parent.resolve())
        config = cls.parse_obj(data)
        LOGGER.debug("loaded config %s", path)
        return config

    def to_toml(self) -> str:
        """Render as TOML (paths absolute, unset optionals omitted)."""
        data = json.loads(self.json(exclude_none=True, by_alias=True))
        return tomli_w.dumps(data)


def threads_from_env(environ: Optional[Dict[str, str]] = None) -> int:
    """Worker cap from ``WILDGROUND_THREADS`` (default 1)."""
    raw = (environ if environ is not None else os.environ).get(THREADS_ENV_VAR, "")
    if not raw.strip():
        return 1
    try:
        value = int(raw)
    except ValueError:
        LOGGER.warning("ignoring %s=%r; expected an integer", THREADS_ENV_VAR, raw)
        return 1
    return max(1, value)
