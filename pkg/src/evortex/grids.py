"""Sampled-field containers shared by every stage.

A Grid2D pins pixel counts, pitch and the physical position of pixel
(0, 0); arrays are stored row-major with shape (ny, nx), x along the
last axis, and the coordinate of pixel (ix, iy) is origin + (ix, iy)*pitch.
Row 0 is the smallest y.

Fields are treated as immutable: operations return new instances and
never write into an input array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["Grid2D", "ScalarField2D", "ComplexField2D"]


@dataclass(frozen=True)
class Grid2D:
    """Uniform 2D sampling grid.

    Parameters
    ----------
    nx, ny : int
        Pixel counts, at least 16. Powers of two keep the FFT stages fast.
    pitch : float
        Pixel pitch in meters, > 0.
    origin : tuple of float
        Physical (x, y) position of the center of pixel (0, 0), meters.
    """

    nx: int
    ny: int
    pitch: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.nx < 16 or self.ny < 16:
            raise ValueError(f"grid must be at least 16x16, got {self.nx}x{self.ny}")
        if not (self.pitch > 0.0):
            raise ValueError(f"pixel pitch must be positive, got {self.pitch!r}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def centered(cls, nx: int, ny: int, pitch: float) -> "Grid2D":
        """Grid whose pixel (nx//2, ny//2) sits exactly at (0, 0)."""
        return cls(nx, ny, pitch, (-(nx // 2) * pitch, -(ny // 2) * pitch))

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx)."""
        return (self.ny, self.nx)

    @property
    def fov(self) -> tuple[float, float]:
        """Physical extent (x, y) in meters."""
        return (self.nx * self.pitch, self.ny * self.pitch)

    def x_coords(self) -> np.ndarray:
        return self.origin[0] + self.pitch * np.arange(self.nx)

    def y_coords(self) -> np.ndarray:
        return self.origin[1] + self.pitch * np.arange(self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays (X of shape (1, nx), Y of (ny, 1))."""
        return self.x_coords()[np.newaxis, :], self.y_coords()[:, np.newaxis]

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        """True if the point lies on the grid, at least `margin` meters
        inside the outermost pixel centers."""
        xs, ys = self.x_coords(), self.y_coords()
        return (
            xs[0] + margin <= x <= xs[-1] - margin
            and ys[0] + margin <= y <= ys[-1] - margin
        )


def _check_shape(grid: Grid2D, arr: np.ndarray, name: str) -> None:
    if arr.shape != grid.shape:
        raise ValueError(f"{name} shape {arr.shape} does not match grid {grid.shape}")


@dataclass(frozen=True)
class ScalarField2D:
    """Real-valued field on a grid (phase in radians, intensity, ...).

    `valid` is an optional boolean mask flagging pixels whose value is
    meaningful; None means every pixel is valid. Values must be finite
    wherever valid.
    """

    grid: Grid2D
    values: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        _check_shape(self.grid, values, "values")
        object.__setattr__(self, "values", values)
        if self.valid is not None:
            valid = np.asarray(self.valid, dtype=bool)
            _check_shape(self.grid, valid, "valid")
            object.__setattr__(self, "valid", valid)
            ok = np.isfinite(values[valid])
        else:
            ok = np.isfinite(values)
        if not np.all(ok):
            raise ValueError("non-finite values in valid pixels")

    def valid_mask(self) -> np.ndarray:
        """Boolean validity mask, materialized."""
        if self.valid is None:
            return np.ones(self.grid.shape, dtype=bool)
        return self.valid

    def all_valid(self) -> bool:
        return self.valid is None or bool(np.all(self.valid))


@dataclass(frozen=True)
class ComplexField2D:
    """Complex wavefunction samples on a grid, dimensionless amplitudes."""

    grid: Grid2D
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        _check_shape(self.grid, amp, "amplitudes")
        if not np.all(np.isfinite(amp.real)) or not np.all(np.isfinite(amp.imag)):
            raise ValueError("non-finite amplitudes")
        object.__setattr__(self, "amplitudes", amp)

    def norm(self) -> float:
        """Discrete L2 norm, sum |psi|^2 * pitch^2."""
        p = self.grid.pitch
        return float(np.sum(np.abs(self.amplitudes) ** 2) * p * p)

    def normalized(self) -> "ComplexField2D":
        """Rescaled copy with norm 1."""
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero field")
        return ComplexField2D(self.grid, self.amplitudes / np.sqrt(n))
