"""16-bit binary graymaps for intensity, phase, and validity images.

Binary PGM (P5) with maxval 65535; sample bytes are most significant
first, as the netpbm format requires for two-byte samples. Phase images
map (-pi, pi] linearly onto 0..65535; other images scale min..max, with
the range reported back so callers can record it in the run manifest.
Invalid pixels render as 0; callers write the validity mask as a sidecar
image (0 invalid, 65535 valid) next to any image with flagged pixels.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "u16_from_range",
    "u16_from_phase",
    "u16_from_validity",
    "write_pgm16",
    "read_pgm16",
]

_MAXVAL = 65535


def u16_from_range(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Scale values linearly onto 0..65535; returns (image, lo, hi).

    A flat array maps to all zeros with lo == hi.
    """
    lo = float(np.min(values))
    hi = float(np.max(values))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("cannot scale non-finite values to an image")
    if hi == lo:
        return np.zeros(values.shape, dtype=np.uint16), lo, hi
    scaled = np.round((values - lo) / (hi - lo) * _MAXVAL)
    return scaled.astype(np.uint16), lo, hi


def u16_from_phase(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Map wrapped phase (-pi, pi] onto the full range; invalid pixels 0."""
    scaled = np.round((values + np.pi) / (2.0 * np.pi) * _MAXVAL)
    image = np.clip(scaled, 0, _MAXVAL).astype(np.uint16)
    return np.where(valid, image, np.uint16(0))


def u16_from_validity(valid: np.ndarray) -> np.ndarray:
    return np.where(valid, np.uint16(_MAXVAL), np.uint16(0))


def write_pgm16(path: Union[str, Path], image: np.ndarray) -> None:
    if image.dtype != np.uint16 or image.ndim != 2:
        raise ValueError(f"need a 2D uint16 image, got {image.dtype} with shape {image.shape}")
    ny, nx = image.shape
    header = f"P5\n{nx} {ny}\n{_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + image.astype(">u2").tobytes())


def read_pgm16(path: Union[str, Path]) -> np.ndarray:
    """Parse a 16-bit binary PGM written by this module."""
    data = Path(path).read_bytes()
    match = re.match(rb"P5\n(\d+) (\d+)\n(\d+)\n", data)
    if match is None:
        raise ValueError(f"{path}: not a binary PGM with the expected header layout")
    nx, ny, maxval = (int(g) for g in match.groups())
    if maxval != _MAXVAL:
        raise ValueError(f"{path}: maxval {maxval}, expected {_MAXVAL}")
    offset = match.end()
    expected = offset + 2 * nx * ny
    if len(data) != expected:
        raise ValueError(f"{path}: {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype=">u2", count=nx * ny, offset=offset).reshape(ny, nx).astype(np.uint16)
