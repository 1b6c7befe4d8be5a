"""Binary field checkpoints.

Layout (little-endian):

    b"NLSF" | version u32 = 1 | n u32 | G u32 x n | L f64 | t f64 | G^n complex128

The payload is row-major with the last axis fastest, each sample stored as a
(real, imaginary) f64 pair.
"""

import logging
import math
import struct
from pathlib import Path

import numpy as np

from .types import Field, Grid

logger = logging.getLogger(__name__)

MAGIC = b"NLSF"
VERSION = 1
_U32 = struct.Struct("<I")
_F64 = struct.Struct("<d")
_PAYLOAD_DTYPE = np.dtype("<c16")


class CheckpointError(ValueError):
    """Malformed checkpoint file."""


class BadMagicError(CheckpointError):
    """File does not start with the NLSF magic."""


class VersionMismatchError(CheckpointError):
    """Unsupported format version."""


class TruncatedPayloadError(CheckpointError):
    """File ends before the declared header or payload does."""


def encode_checkpoint(f: Field, t: float) -> bytes:
    grid = f.grid
    header = [MAGIC, _U32.pack(VERSION), _U32.pack(grid.n)]
    header.extend(_U32.pack(grid.G) for _ in range(grid.n))
    header.append(_F64.pack(grid.L))
    header.append(_F64.pack(t))
    payload = np.ascontiguousarray(f.values, dtype=_PAYLOAD_DTYPE).tobytes()
    return b"".join(header) + payload


def _read(blob: bytes, offset: int, size: int, what: str) -> bytes:
    if offset + size > len(blob):
        raise TruncatedPayloadError(
            f"truncated payload: need {size} bytes for {what} at offset {offset}, file has {len(blob)}"
        )
    return blob[offset : offset + size]


def decode_checkpoint(blob: bytes) -> tuple[Field, float]:
    """Parse a checkpoint blob.

    Raises:
        BadMagicError: Wrong magic bytes
        VersionMismatchError: Version other than 1
        TruncatedPayloadError: Header or payload cut short
        CheckpointError: Any other malformed content
    """
    if _read(blob, 0, 4, "magic") != MAGIC:
        raise BadMagicError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    offset = 4
    (version,) = _U32.unpack(_read(blob, offset, 4, "version"))
    offset += 4
    if version != VERSION:
        raise VersionMismatchError(f"version mismatch: file has {version}, reader supports {VERSION}")
    (n,) = _U32.unpack(_read(blob, offset, 4, "dimension"))
    offset += 4
    if not 1 <= n <= 4:
        raise CheckpointError(f"invalid dimension {n}")
    extents = struct.unpack(f"<{n}I", _read(blob, offset, 4 * n, "extents"))
    offset += 4 * n
    if len(set(extents)) != 1:
        raise CheckpointError(f"non-cubic extents {extents}")
    (L,) = _F64.unpack(_read(blob, offset, 8, "box length"))
    offset += 8
    (t,) = _F64.unpack(_read(blob, offset, 8, "time"))
    offset += 8
    try:
        grid = Grid(n=n, G=extents[0], L=L)
    except ValueError as e:
        raise CheckpointError(f"invalid grid in header: {e}") from e
    if not math.isfinite(t):
        raise CheckpointError(f"non-finite time {t}")

    expected = math.prod(grid.shape) * _PAYLOAD_DTYPE.itemsize
    payload = _read(blob, offset, expected, "samples")
    if len(blob) != offset + expected:
        raise CheckpointError(f"{len(blob) - offset - expected} trailing bytes after payload")
    values = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).reshape(grid.shape)
    try:
        field = Field(grid=grid, values=values)
    except ValueError as e:
        raise CheckpointError(f"invalid payload: {e}") from e
    return field, t


def save_checkpoint(f: Field, t: float, path: Path | str) -> Path:
    """Write `f` at time `t` to `path`, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(f, t))
    logger.debug(f"Saved checkpoint: {path} (t={t:g})")
    return path


def load_checkpoint(path: Path | str) -> tuple[Field, float]:
    """Read a checkpoint written by save_checkpoint."""
    path = Path(path)
    field, t = decode_checkpoint(path.read_bytes())
    logger.debug(f"Loaded checkpoint: {path} (t={t:g})")
    return field, t
