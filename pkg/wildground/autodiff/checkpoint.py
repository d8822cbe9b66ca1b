"""Parameter checkpoint files.

Layout (little-endian)::

    b"WGCKPT1"
    u32 record count
    per record:
        u16 name length, name (utf-8)
        u8 ndim, u32 extent per axis
        f64 values in row-major order

"""
from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Mapping, Optional, Tuple, cast

import numpy as np

from ..constants import CHECKPOINT_MAGIC
from ..exceptions import CheckpointFormatError, CheckpointTruncatedError

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


def encode_checkpoint(records: Mapping[str, np.ndarray]) -> bytes:
    """Serialize named arrays in insertion order."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", len(records))]
    for name, value in records.items():
        encoded = name.encode("utf-8")
        array = np.ascontiguousarray(value, dtype="<f8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.tobytes(order="C"))
    return b"".join(chunks)


class _Reader:
    def __init__(self, payload: bytes, path: Optional[Path]) -> None:
        self.payload = payload
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise CheckpointTruncatedError(self.path)
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> Tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(
    payload: bytes, path: Optional[Path] = None
) -> Dict[str, np.ndarray]:
    """Parse bytes written by :func:`encode_checkpoint`.

    Raises:
        CheckpointFormatError: Wrong magic header, bad name or trailing bytes.
        CheckpointTruncatedError: Data ends inside a record.

    """
    if not payload.startswith(CHECKPOINT_MAGIC):
        raise CheckpointFormatError(path, "missing WGCKPT1 header")
    reader = _Reader(payload, path)
    reader.offset = len(CHECKPOINT_MAGIC)
    (count,) = reader.unpack("<I")
    records: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError(path, "record name is not utf-8") from None
        if name in records:
            raise CheckpointFormatError(path, f"duplicate record {name}")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I")
        size = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(reader.take(size * 8), dtype="<f8")
        records[name] = values.reshape(shape).astype(np.float64)
    if reader.offset != len(payload):
        raise CheckpointFormatError(path, "unexpected trailing bytes")
    return records


def save_checkpoint(path: Path, records: Mapping[str, np.ndarray]) -> Path:
    """Write ``records`` to ``path`` atomically (write then rename)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    staging = path.with_name(path.name + ".tmp")
    staging.write_bytes(encode_checkpoint(records))
    staging.replace(path)
    LOGGER.verbose("wrote checkpoint %s (%d records)", path, len(records))
    return path


def load_checkpoint(path: Path) -> Dict[str, np.ndarray]:
    """Read a checkpoint file."""
    records = decode_checkpoint(path.read_bytes(), path)
    LOGGER.debug("read checkpoint %s (%d records)", path, len(records))
    return records
