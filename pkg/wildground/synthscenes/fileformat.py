"""Scene files.

Layout (little-endian)::

    b"WGSCN1"
    u32 format version
    u32 frame count K
    K point blocks: u32 count, then x, y, z, intensity as 4×f32 per point
    K image blocks: u16 H, u16 W, then H×W×3 u8 RGB
    u16 M, then M u16 token ids
    u8 span count, then u16 begin, u16 end per span
    7 f32 ground-truth box
    u32 CRC32 of everything before it

The actors and the target id live in a JSON sidecar with the same stem
(``train-00000.actors.json`` next to ``train-00000.wgscn``). A scene file
without its sidecar still decodes; only the symbolic oracle needs it.

"""
# pylint: disable=no-self-argument
from __future__ import annotations

import logging
import struct
import zlib
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Tuple, cast

import numpy as np
from pydantic import validator

from ..constants import ANNOTATION_SUFFIX, SCENE_FORMAT_VERSION, SCENE_MAGIC
from ..exceptions import (
    EmptyPointCloudError,
    SceneChecksumError,
    SceneFormatError,
    SceneTruncatedError,
    SceneVersionError,
)
from ..geometry.boxes import Box3D
from ..models.base import BaseModel
from ..pointnet.cloud import PointCloud
from .actors import Actor
from .scene import Scene

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

VERSION = struct.Struct("<I")
CRC = struct.Struct("<I")
HEADER_SIZE = len(SCENE_MAGIC) + VERSION.size


class SceneAnnotation(BaseModel):
    """Actors of a scene and the one its utterance refers to."""

    target_id: int
    actors: List[Actor]

    @validator("actors")
    def _check_actors(cls, v: List[Actor]) -> List[Actor]:
        if not v:
            raise ValueError("an annotation needs at least one actor")
        return v

    @classmethod
    def from_scene(cls, scene: Scene) -> SceneAnnotation:
        """Annotation of an annotated scene."""
        return cls(target_id=cast(int, scene.target_id), actors=scene.actors)


def annotation_path(path: Path) -> Path:
    """Sidecar of the scene file at ``path``."""
    return path.with_suffix(ANNOTATION_SUFFIX)


def _box_bytes(box: Box3D) -> bytes:
    return box.to_array().astype("<f4").tobytes()


def encode_scene(scene: Scene) -> bytes:
    """Serialize a scene after checking its invariants.

    Actors are not part of the payload; see :func:`write_scene`.

    Raises:
        InvalidSceneError: The scene violates an invariant.

    """
    scene.validate()
    parts = [SCENE_MAGIC, VERSION.pack(SCENE_FORMAT_VERSION)]
    parts.append(struct.pack("<I", scene.frames))
    for cloud in scene.clouds:
        xyzi = np.concatenate([cloud.xyz, cloud.intensity[:, None]], axis=1)
        parts.append(struct.pack("<I", len(cloud)))
        parts.append(np.ascontiguousarray(xyzi, dtype="<f4").tobytes())
    for image in scene.images:
        parts.append(struct.pack("<HH", *image.shape[:2]))
        parts.append(np.ascontiguousarray(image, dtype=np.uint8).tobytes())
    parts.append(struct.pack("<H", len(scene.token_ids)))
    parts.append(scene.token_ids.astype("<u2").tobytes())
    parts.append(struct.pack("<B", len(scene.spans)))
    for begin, end in scene.spans:
        parts.append(struct.pack("<HH", begin, end))
    parts.append(_box_bytes(scene.gt_box))
    payload = b"".join(parts)
    return payload + CRC.pack(zlib.crc32(payload))


class _Reader:
    def __init__(self, payload: bytes, path: Optional[Path]) -> None:
        self.payload = payload
        self.offset = HEADER_SIZE
        self.path = path

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise SceneTruncatedError(self.path)
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> Tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(width * count), dtype=dtype)

    def box(self) -> Box3D:
        return Box3D.from_array(self.array("<f4", 7).astype(np.float64))


def _check_header(payload: bytes, path: Optional[Path]) -> None:
    if not payload.startswith(SCENE_MAGIC):
        raise SceneFormatError(path, "missing WGSCN1 header")
    if len(payload) < HEADER_SIZE:
        raise SceneTruncatedError(path)
    (version,) = VERSION.unpack_from(payload, len(SCENE_MAGIC))
    if version != SCENE_FORMAT_VERSION:
        raise SceneVersionError(path, SCENE_FORMAT_VERSION, version)


def _check_crc(payload: bytes, end: int, path: Optional[Path]) -> None:
    """Compare the CRC32 stored at ``end`` with the bytes before it."""
    if end < HEADER_SIZE or end + CRC.size > len(payload):
        return
    (stored,) = CRC.unpack_from(payload, end)
    computed = zlib.crc32(payload[:end])
    if stored != computed:
        raise SceneChecksumError(path, stored, computed)


_Blocks = Tuple[
    List[PointCloud], List[np.ndarray], np.ndarray, List[Tuple[int, int]], Box3D
]


def _read_blocks(reader: _Reader) -> _Blocks:
    path = reader.path
    (frames,) = reader.unpack("<I")
    clouds: List[PointCloud] = []
    for frame in range(frames):
        (count,) = reader.unpack("<I")
        xyzi = reader.array("<f4", 4 * count).reshape(count, 4).astype(np.float64)
        try:
            clouds.append(PointCloud(xyzi[:, :3], xyzi[:, 3], frame_time=frame))
        except (ValueError, EmptyPointCloudError) as exc:
            raise SceneFormatError(path, str(exc)) from exc
    images = []
    for _ in range(frames):
        height, width = reader.unpack("<HH")
        pixels = reader.array("u1", height * width * 3)
        images.append(pixels.reshape(height, width, 3))
    if len({image.shape for image in images}) > 1:
        raise SceneFormatError(path, "image sizes differ between frames")
    (length,) = reader.unpack("<H")
    token_ids = reader.array("<u2", length).astype(np.int64)
    (span_count,) = reader.unpack("<B")
    spans = [cast(Tuple[int, int], reader.unpack("<HH")) for _ in range(span_count)]
    try:
        gt_box = reader.box()
    except ValueError as exc:
        raise SceneFormatError(path, f"invalid ground-truth box: {exc}") from exc
    return clouds, images, token_ids, spans, gt_box


def decode_scene(
    payload: bytes,
    path: Optional[Path] = None,
    scene_id: str = "scene",
    annotation: Optional[SceneAnnotation] = None,
) -> Scene:
    """Parse bytes written by :func:`encode_scene`.

    A payload that ends before its declared blocks and checksum is
    truncated. One whose blocks are complete but whose stored CRC32 differs
    is corrupt.

    Args:
        payload: Encoded scene.
        path: File the payload came from, for error messages.
        scene_id: Name given to the scene.
        annotation: Actors and target id to attach.

    Raises:
        SceneFormatError: Wrong magic, trailing bytes or an inconsistent block.
        SceneVersionError: Written by another format version.
        SceneTruncatedError: Ends before its declared blocks and checksum.
        SceneChecksumError: Content does not match the stored CRC32.

    """
    _check_header(payload, path)
    reader = _Reader(payload, path)
    try:
        clouds, images, token_ids, spans, gt_box = _read_blocks(reader)
    except SceneTruncatedError:
        raise
    except SceneFormatError:
        # a damaged count or value shows up as a checksum error when one is due
        _check_crc(payload, len(payload) - CRC.size, path)
        raise
    end = reader.offset
    if len(payload) < end + CRC.size:
        raise SceneTruncatedError(path)
    _check_crc(payload, end, path)
    if len(payload) > end + CRC.size:
        raise SceneFormatError(path, "unexpected trailing bytes")
    return Scene(
        clouds=clouds,
        images=np.stack(images) if images else np.zeros((0, 0, 0, 3), np.uint8),
        token_ids=token_ids,
        spans=spans,
        gt_box=gt_box,
        actors=annotation.actors if annotation else None,
        target_id=annotation.target_id if annotation else None,
        scene_id=scene_id,
    )


def scene_checksum(payload: bytes) -> int:
    """Stored CRC32 of an encoded scene."""
    (stored,) = CRC.unpack_from(payload, len(payload) - CRC.size)
    return stored


def write_scene(scene: Scene, path: Path) -> int:
    """Write ``scene`` and its annotation sidecar; return the CRC32.

    Raises:
        InvalidSceneError: The scene violates an invariant; nothing is written.

    """
    payload = encode_scene(scene)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    LOGGER.debug("wrote %s (%d bytes)", path, len(payload))
    if scene.annotated:
        annotation_path(path).write_text(
            SceneAnnotation.from_scene(scene).json(), encoding="utf-8"
        )
    return scene_checksum(payload)


def read_annotation(path: Path) -> Optional[SceneAnnotation]:
    """Sidecar of the scene file at ``path``, if one exists.

    Raises:
        SceneFormatError: The sidecar is not a valid annotation.

    """
    sidecar = annotation_path(path)
    if not sidecar.is_file():
        return None
    try:
        return SceneAnnotation.parse_file(sidecar)
    except ValueError as exc:
        raise SceneFormatError(sidecar, f"invalid actor annotations: {exc}") from exc


def read_scene(path: Path) -> Scene:
    """Read a scene file and its sidecar; the scene id is the file stem."""
    return decode_scene(path.read_bytes(), path, path.stem, read_annotation(path))
