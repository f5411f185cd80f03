"""Scalar wave optics: source preparation, phase imprinting, paraxial
free-space propagation and detection.

Propagation uses the angular-spectrum transfer function
exp(-i pi lambda z (fx^2 + fy^2)) with a hard band limit that zeroes
spatial frequencies whose transfer-function phase would wrap between
neighboring frequency samples (per axis, |f| <= (N*pitch)/(2*lambda*|z|)
in units of the frequency step). Inside the admissible band the operator
is exactly unitary and forms a group in the distance parameter; content
beyond the limit would alias off the periodic grid and is discarded the
way a physical aperture would discard it. Positive distances are
underfocus. The overall exp(i k z) piston phase is dropped.
"""

from __future__ import annotations

import numpy as np

from .grids import ComplexField2D, Grid2D, ScalarField2D
from .physics import BeamParameters

__all__ = [
    "make_gaussian",
    "apply_phase_mask",
    "apply_aperture",
    "fresnel_propagate",
    "intensity",
    "apodize",
    "max_propagation_distance",
]


def make_gaussian(grid: Grid2D, waist: float, center: tuple[float, float] = (0.0, 0.0)) -> ComplexField2D:
    """Normalized Gaussian beam exp(-rho^2 / waist^2) sampled on `grid`.

    Parameters
    ----------
    grid : Grid2D
    waist : float
        1/e amplitude radius in meters. Must exceed 2 pixels so the
        profile is resolved, and must not exceed a quarter of the
        smaller field of view so the tails stay negligible at the rim.
    center : tuple of float
        Beam axis position (x, y) in meters; must lie on the grid.

    Returns
    -------
    ComplexField2D
        Unit-norm field (sum |psi|^2 * pitch^2 = 1).
    """
    if not waist > 2.0 * grid.pitch:
        raise ValueError(f"waist {waist:g} m must exceed 2 pixels ({2 * grid.pitch:g} m)")
    quarter = 0.25 * min(grid.fov)
    if waist > quarter * (1.0 + 1e-12):
        raise ValueError(f"waist {waist:g} m exceeds a quarter of the field of view ({quarter:g} m)")
    if not grid.contains(center[0], center[1]):
        raise ValueError(f"beam center {center} lies outside the grid")
    x, y = grid.mesh()
    rho2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
    amp = np.exp(-rho2 / (waist * waist)).astype(np.complex128)
    return ComplexField2D(grid, amp).normalized()


def apply_phase_mask(psi: ComplexField2D, mask: ScalarField2D) -> ComplexField2D:
    """Multiply by exp(i * mask). The modulus is unchanged pixel for pixel.

    The mask must live on the same grid as the field. Invalid mask pixels
    (an azimuthal mask's singular point, for instance) carry value zero by
    construction and therefore apply no phase shift.
    """
    if mask.grid != psi.grid:
        raise ValueError(f"mask grid {mask.grid.shape} does not match field grid {psi.grid.shape}")
    return ComplexField2D(psi.grid, psi.amplitudes * np.exp(1j * mask.values))


def apply_aperture(psi: ComplexField2D, keep: np.ndarray) -> ComplexField2D:
    """Zero the field where `keep` is False (an opaque obstruction).

    `keep` is a boolean array on the field's grid shape. The result is
    not renormalized; blocked probability is genuinely lost.
    """
    keep = np.asarray(keep, dtype=bool)
    if keep.shape != psi.grid.shape:
        raise ValueError(f"aperture shape {keep.shape} does not match field grid {psi.grid.shape}")
    return ComplexField2D(psi.grid, np.where(keep, psi.amplitudes, 0.0))


def max_propagation_distance(grid: Grid2D, beam: BeamParameters) -> float:
    """Largest |z| for which at least 8 frequency samples per axis survive
    the band limit. Beyond this the retained band is too narrow to carry
    the field and propagation refuses to proceed.
    """
    lam = beam.wavelength
    zx = (grid.nx * grid.pitch) ** 2 / (16.0 * lam)
    zy = (grid.ny * grid.pitch) ** 2 / (16.0 * lam)
    return min(zx, zy)


def fresnel_propagate(psi: ComplexField2D, distance: float, beam: BeamParameters) -> ComplexField2D:
    """Propagate a paraxial wave by `distance` meters (positive = underfocus).

    Parameters
    ----------
    psi : ComplexField2D
    distance : float
        Propagation distance in meters; 0 returns the field unchanged
        and negative distances invert positive ones exactly within the
        admissible band.
    beam : BeamParameters
        Supplies the electron wavelength.

    Returns
    -------
    ComplexField2D

    Raises
    ------
    ValueError
        If |distance| exceeds the aliasing-safe maximum for this grid
        and wavelength; the message names the admissible maximum.
    """
    if distance == 0.0:
        return ComplexField2D(psi.grid, psi.amplitudes)
    grid = psi.grid
    lam = beam.wavelength
    z_max = max_propagation_distance(grid, beam)
    if abs(distance) > z_max:
        raise ValueError(
            f"|distance| = {abs(distance):g} m exceeds the aliasing-safe maximum "
            f"{z_max:g} m for this grid and wavelength"
        )
    fx = np.fft.fftfreq(grid.nx, d=grid.pitch)[np.newaxis, :]
    fy = np.fft.fftfreq(grid.ny, d=grid.pitch)[:, np.newaxis]
    tf = np.exp(-1j * np.pi * lam * distance * (fx * fx + fy * fy))
    # Zero frequencies whose TF phase would wrap between samples (per axis).
    flim_x = grid.nx * grid.pitch / (2.0 * lam * abs(distance))
    flim_y = grid.ny * grid.pitch / (2.0 * lam * abs(distance))
    band = (np.abs(fx) <= flim_x) & (np.abs(fy) <= flim_y)
    tf = np.where(band, tf, 0.0)
    out = np.fft.ifft2(np.fft.fft2(psi.amplitudes) * tf)
    return ComplexField2D(grid, out)


def intensity(psi: ComplexField2D) -> ScalarField2D:
    """Probability density |psi|^2."""
    return ScalarField2D(psi.grid, np.abs(psi.amplitudes) ** 2)


def apodize(psi: ComplexField2D, border: float = 0.05) -> ComplexField2D:
    """Taper the field to zero over a raised-cosine rim.

    The window ramps smoothly from 0 to 1 over `border` times the pixel
    count on every edge of both axes and is 1 in the interior. Apply
    before long defocus series so energy pushed off one edge of the
    periodic grid cannot re-enter from the other. The result is not
    renormalized.
    """
    if not 0.0 < border < 0.5:
        raise ValueError(f"border fraction must be in (0, 0.5), got {border!r}")

    def ramp(n: int) -> np.ndarray:
        m = int(round(border * n))
        w = np.ones(n)
        if m > 0:
            t = np.sin(0.5 * np.pi * (np.arange(m) + 0.5) / m) ** 2
            w[:m] = t
            w[n - m:] = t[::-1]
        return w

    window = ramp(psi.grid.ny)[:, np.newaxis] * ramp(psi.grid.nx)[np.newaxis, :]
    return ComplexField2D(psi.grid, psi.amplitudes * window)
