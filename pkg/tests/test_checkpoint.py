"""Tests for the binary checkpoint format."""

import math
import struct

import numpy as np
import pytest

from imethod_lab.checkpoint import (
    MAGIC,
    BadMagicError,
    CheckpointError,
    TruncatedPayloadError,
    VersionMismatchError,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from imethod_lab.initial_data import rough_data
from imethod_lab.spectral import make_grid
from imethod_lab.types import Field, RoughDataSpec


@pytest.fixture
def field():
    return rough_data(make_grid(3, 8, 2 * math.pi), RoughDataSpec(s=0.5, seed=7))


def test_header_layout(field):
    blob = encode_checkpoint(field, 0.25)
    assert blob[:4] == MAGIC
    version, n, g0, g1, g2 = struct.unpack("<5I", blob[4:24])
    assert (version, n, g0, g1, g2) == (1, 3, 8, 8, 8)
    L, t = struct.unpack("<2d", blob[24:40])
    assert L == 2 * math.pi
    assert t == 0.25
    assert len(blob) == 40 + 8**3 * 16


def test_save_and_load_are_bit_identical(tmp_path, field):
    path = save_checkpoint(field, 1.5, tmp_path / "nested" / "state.nlsf")
    loaded, t = load_checkpoint(path)
    assert t == 1.5
    assert loaded.grid == field.grid
    assert loaded.values.tobytes() == field.values.tobytes()
    assert encode_checkpoint(loaded, t) == path.read_bytes()


def test_bad_magic(field):
    blob = b"XXXX" + encode_checkpoint(field, 0.0)[4:]
    with pytest.raises(BadMagicError, match="bad magic"):
        decode_checkpoint(blob)


def test_version_mismatch(field):
    blob = bytearray(encode_checkpoint(field, 0.0))
    blob[4:8] = struct.pack("<I", 2)
    with pytest.raises(VersionMismatchError, match="version mismatch"):
        decode_checkpoint(bytes(blob))


@pytest.mark.parametrize("cut", [2, 10, 30, 100])
def test_truncated(field, cut):
    blob = encode_checkpoint(field, 0.0)
    with pytest.raises(TruncatedPayloadError, match="truncated"):
        decode_checkpoint(blob[: len(blob) - cut] if cut == 100 else blob[:cut])


def test_trailing_bytes(field):
    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(encode_checkpoint(field, 0.0) + b"\x00")


def test_non_cubic_extents(field):
    blob = bytearray(encode_checkpoint(field, 0.0))
    blob[16:20] = struct.pack("<I", 16)
    with pytest.raises(CheckpointError, match="non-cubic"):
        decode_checkpoint(bytes(blob))


def test_non_finite_payload(field):
    blob = bytearray(encode_checkpoint(field, 0.0))
    blob[40:48] = struct.pack("<d", math.nan)
    with pytest.raises(CheckpointError, match="invalid payload"):
        decode_checkpoint(bytes(blob))


def test_errors_are_value_errors():
    assert issubclass(BadMagicError, ValueError)
    assert issubclass(TruncatedPayloadError, CheckpointError)


def test_zero_field_round_trip(tmp_path):
    grid = make_grid(1, 8, 1.0)
    zero = Field(grid=grid, values=np.zeros(grid.shape))
    loaded, t = load_checkpoint(save_checkpoint(zero, 0.0, tmp_path / "zero.nlsf"))
    assert t == 0.0
    assert not np.any(loaded.values)
