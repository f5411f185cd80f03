"""Binary interchange format for complex fields.

Layout, little-endian throughout:

    offset  size  content
    0       14    magic "evortex-field\\x00"
    14      2     format version (u16), currently 1
    16      8     nx (u64)
    24      8     ny (u64)
    32      8     pixel pitch in meters (f64)
    40      8     origin x in meters (f64)
    48      8     origin y in meters (f64)
    56      16*n  row-major samples, (re, im) f64 pairs, n = nx * ny
    56+16n  4     CRC-32 of everything before it (u32)

Readers reject malformed files with the byte offset of the violation so
a truncated transfer or a foreign file is diagnosed, not interpreted.
"""

from __future__ import annotations

import math
import struct
import zlib
from pathlib import Path
from typing import Union

import numpy as np

from .grids import ComplexField2D, Grid2D

__all__ = ["write_field", "read_field", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"evortex-field\x00"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<14sH")
_DESCRIPTOR = struct.Struct("<QQddd")
_PAYLOAD_OFFSET = _HEADER.size + _DESCRIPTOR.size
# Payload cap: 2^26 samples is a gigabyte of field data.
_MAX_SAMPLES = 1 << 26


def _fail(offset: int, message: str) -> ValueError:
    return ValueError(f"field file: {message} (at byte offset {offset})")


def write_field(path: Union[str, Path], field: ComplexField2D) -> None:
    """Serialize the field; overwrites any existing file atomically enough
    for sequential pipelines (write then rename is not needed here)."""
    grid = field.grid
    body = _HEADER.pack(MAGIC, FORMAT_VERSION) + _DESCRIPTOR.pack(
        grid.nx, grid.ny, grid.pitch, grid.origin[0], grid.origin[1]
    )
    body += field.amplitudes.astype("<c16").tobytes()
    body += struct.pack("<I", zlib.crc32(body))
    Path(path).write_bytes(body)


def read_field(path: Union[str, Path]) -> ComplexField2D:
    """Parse a field file, validating structure, descriptor, and checksum.

    Raises
    ------
    ValueError
        On any format violation, naming the byte offset.
    FileNotFoundError
        If the path does not exist.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise _fail(len(data), f"truncated header, {len(data)} of {_HEADER.size} bytes")
    magic, version = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise _fail(0, "bad magic; not a field file")
    if version != FORMAT_VERSION:
        raise _fail(14, f"unsupported format version {version}")
    if len(data) < _PAYLOAD_OFFSET:
        raise _fail(len(data), "truncated grid descriptor")
    nx, ny, pitch, ox, oy = _DESCRIPTOR.unpack_from(data, _HEADER.size)
    if nx == 0 or ny == 0 or nx * ny > _MAX_SAMPLES:
        raise _fail(16, f"unreasonable grid {nx}x{ny}")
    if not (math.isfinite(pitch) and pitch > 0.0):
        raise _fail(32, f"invalid pixel pitch {pitch!r}")
    if not (math.isfinite(ox) and math.isfinite(oy)):
        raise _fail(40, f"non-finite origin ({ox!r}, {oy!r})")
    try:
        grid = Grid2D(int(nx), int(ny), pitch, (ox, oy))
    except ValueError as exc:
        raise _fail(16, str(exc)) from exc
    n = int(nx) * int(ny)
    expected = _PAYLOAD_OFFSET + 16 * n + 4
    if len(data) < expected:
        raise _fail(len(data), f"truncated payload, {len(data)} of {expected} bytes")
    if len(data) > expected:
        raise _fail(expected, f"{len(data) - expected} trailing bytes")
    (stored,) = struct.unpack_from("<I", data, expected - 4)
    actual = zlib.crc32(data[: expected - 4])
    if stored != actual:
        raise _fail(expected - 4, f"checksum mismatch, stored {stored:#010x} != {actual:#010x}")
    samples = np.frombuffer(data, dtype="<c16", count=n, offset=_PAYLOAD_OFFSET)
    values = samples.astype(np.complex128).reshape(int(ny), int(nx))
    try:
        return ComplexField2D(grid, values)
    except ValueError as exc:
        raise _fail(_PAYLOAD_OFFSET, str(exc)) from exc
