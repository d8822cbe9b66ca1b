"""Constant values."""
from typing_extensions import Final

CHECKPOINT_MAGIC: Final[bytes] = b"WGCKPT1"  #: Header of parameter checkpoint files.
SCENE_MAGIC: Final[bytes] = b"WGSCN1"  #: Header of scene files.
SCENE_FORMAT_VERSION: Final[int] = 1
MANIFEST_FORMAT: Final[str] = "wildground-manifest"

FEATURE_DIM: Final[int] = 288
"""Width of every token leaving an encoder."""

IMAGE_SIZE: Final[int] = 64
PATCH_SIZE: Final[int] = 16

BEV_X_RANGE: Final = (0.0, 32.0)
"""Forward extent in meters covered by the rendered image (top to bottom)."""

BEV_Y_RANGE: Final = (-16.0, 16.0)
"""Lateral extent in meters covered by the rendered image (left to right)."""

NOT_MENTIONED: Final[str] = "not-mentioned"
"""Terminal token appended to every utterance; last line of a vocabulary file."""

PERCEPTION_RADIUS: Final[float] = 30.0
"""Meters; also the scale applied to seed coordinates by the fourier3d embedding."""

LOGIT_CLIP: Final[float] = 15.0

THREADS_ENV_VAR: Final[str] = "WILDGROUND_THREADS"

SCENE_SUFFIX: Final[str] = ".wgscn"
ANNOTATION_SUFFIX: Final[str] = ".actors.json"
"""Actor annotations stored next to a scene file of the same stem."""
CHECKPOINT_SUFFIX: Final[str] = ".wgckpt"
