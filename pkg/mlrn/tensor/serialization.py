"""Flat binary container of named rank-4 tensors.

Layout: b"MLRN", version byte 0x01, then per entry a little-endian u32 name
length, the UTF-8 name, four u64 dimensions and the row-major f64 values.
Entries run until end of file.
"""

from __future__ import annotations

import logging
import struct
from typing import TYPE_CHECKING

import numpy as np

from mlrn.tensor.tensor import FloatArray

if TYPE_CHECKING:
    from collections.abc import Mapping
    from pathlib import Path

logger = logging.getLogger(__name__)

MAGIC = b"MLRN"
FORMAT_VERSION = 1
_NAME_LENGTH = struct.Struct("<I")
_SHAPE = struct.Struct("<4Q")
_VALUE_DTYPE = np.dtype("<f8")


class CheckpointError(ValueError):
    """Raised for malformed parameter containers and checkpoint mismatches."""


def encode_tensors(tensors: Mapping[str, FloatArray]) -> bytes:
    chunks = [MAGIC, bytes([FORMAT_VERSION])]
    for name, values in tensors.items():
        if values.ndim != 4:
            raise CheckpointError(f"{name!r} is not rank 4: shape {values.shape}")
        encoded_name = name.encode("utf-8")
        chunks.append(_NAME_LENGTH.pack(len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(_SHAPE.pack(*values.shape))
        chunks.append(np.ascontiguousarray(values, dtype=_VALUE_DTYPE).tobytes())
    return b"".join(chunks)


def decode_tensors(payload: bytes) -> dict[str, FloatArray]:
    header = len(MAGIC) + 1
    if payload[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a parameter container: bad magic bytes")
    if len(payload) < header or payload[len(MAGIC)] != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported container version (expected {FORMAT_VERSION})"
        )

    tensors: dict[str, FloatArray] = {}
    offset = header
    try:
        while offset < len(payload):
            (name_length,) = _NAME_LENGTH.unpack_from(payload, offset)
            offset += _NAME_LENGTH.size
            name = payload[offset : offset + name_length].decode("utf-8")
            offset += name_length
            shape = _SHAPE.unpack_from(payload, offset)
            offset += _SHAPE.size
            count = int(np.prod(shape))
            end = offset + count * _VALUE_DTYPE.itemsize
            if end > len(payload):
                raise CheckpointError(f"container truncated inside {name!r}")
            values = np.frombuffer(
                payload, dtype=_VALUE_DTYPE, count=count, offset=offset
            )
            tensors[name] = values.astype(np.float64).reshape(shape)
            offset = end
    except (struct.error, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt parameter container: {exc}") from exc
    return tensors


def save_tensors(path: Path, tensors: Mapping[str, FloatArray]) -> None:
    path.write_bytes(encode_tensors(tensors))
    logger.debug("Wrote %d tensors to %s", len(tensors), path)


def load_tensors(path: Path) -> dict[str, FloatArray]:
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read container {path}: {exc}") from exc
    return decode_tensors(payload)
