"""Off-axis hologram synthesis and sideband phase reconstruction.

A tilted plane reference a exp(2 pi i (x cos(alpha) + y sin(alpha)) / d)
interferes with the object wave; the interference term that carries the
object wave rides the carrier at spatial frequency 1/d along alpha.
Reconstruction demodulates by the exact carrier in real space (so a
carrier that falls between frequency bins costs nothing), low-passes
around the recentered sideband with a raised-cosine-edged circular mask,
and fixes the arbitrary global phase by zeroing the mean phase of the
brightest tenth of the pixels. No 2D unwrapping is performed anywhere;
winding readouts belong to the topology module, which unwraps along
loops only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grids import ComplexField2D, Grid2D, ScalarField2D
from .topology import wrap_phase

__all__ = [
    "HologramParams",
    "simulate_hologram",
    "reconstruct_sideband",
    "phase_map",
]


@dataclass(frozen=True)
class HologramParams:
    """Carrier and reconstruction settings for off-axis holography.

    fringe_spacing : meters between fringes (carrier wavelength)
    fringe_angle : carrier direction in radians from the +x axis
    reference_amplitude : reference wave amplitude relative to the object
    sideband_mask_radius : low-pass radius in 1/m; None selects a third
        of the carrier frequency
    """

    fringe_spacing: float
    fringe_angle: float = np.pi / 4.0
    reference_amplitude: float = 1.0
    sideband_mask_radius: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.fringe_spacing > 0.0:
            raise ValueError(f"fringe spacing must be positive, got {self.fringe_spacing!r}")
        if not self.reference_amplitude > 0.0:
            raise ValueError(f"reference amplitude must be positive, got {self.reference_amplitude!r}")
        if self.sideband_mask_radius is not None:
            if not self.sideband_mask_radius > 0.0:
                raise ValueError("sideband mask radius must be positive")
            if self.sideband_mask_radius >= 0.5 * self.carrier_frequency:
                raise ValueError(
                    "sideband mask radius must stay below half the carrier frequency "
                    f"({0.5 * self.carrier_frequency:g} 1/m)"
                )

    @property
    def carrier_frequency(self) -> float:
        return 1.0 / self.fringe_spacing

    def mask_radius(self) -> float:
        if self.sideband_mask_radius is not None:
            return self.sideband_mask_radius
        return self.carrier_frequency / 3.0


def _check_nyquist(grid: Grid2D, params: HologramParams) -> None:
    if params.fringe_spacing < 2.0 * grid.pitch:
        raise ValueError(
            f"fringe spacing {params.fringe_spacing:g} m is below the Nyquist limit "
            f"2*pitch = {2.0 * grid.pitch:g} m"
        )


def _carrier_wave(grid: Grid2D, params: HologramParams) -> np.ndarray:
    x, y = grid.mesh()
    phase = 2.0 * np.pi * (x * np.cos(params.fringe_angle) + y * np.sin(params.fringe_angle))
    return np.exp(1j * phase / params.fringe_spacing)


def simulate_hologram(psi_obj: ComplexField2D, params: HologramParams) -> ScalarField2D:
    """Interference intensity of the object wave with the tilted reference.

    Raises
    ------
    ValueError
        If the fringe spacing violates the grid's Nyquist limit.
    """
    _check_nyquist(psi_obj.grid, params)
    ref = params.reference_amplitude * _carrier_wave(psi_obj.grid, params)
    return ScalarField2D(psi_obj.grid, np.abs(psi_obj.amplitudes + ref) ** 2)


def _locate_carrier_peak(hologram: ScalarField2D, params: HologramParams) -> None:
    """Verify the sideband actually sits at the nominal carrier.

    A local maximum of |FFT| is required inside the sideband disk around
    the nominal carrier frequency, prominent against the disk's median.
    An object with a flat component puts that peak within a bin of the
    carrier itself; a pure vortex object has a spectral null exactly at
    the carrier and shows up as a ring crest inside the disk instead,
    which counts equally as evidence of the carrier.
    """
    grid = hologram.grid
    spectrum = np.abs(np.fft.fft2(hologram.values))
    fx = np.fft.fftfreq(grid.nx, d=grid.pitch)[np.newaxis, :]
    fy = np.fft.fftfreq(grid.ny, d=grid.pitch)[:, np.newaxis]
    fcx = np.cos(params.fringe_angle) * params.carrier_frequency
    fcy = np.sin(params.fringe_angle) * params.carrier_frequency
    disk = np.hypot(fx - fcx, fy - fcy) <= params.mask_radius()
    if not np.any(disk):
        raise ValueError("sideband mask radius is below the frequency resolution of the grid")
    disk_values = np.where(disk, spectrum, -np.inf)
    py, px = np.unravel_index(np.argmax(disk_values), spectrum.shape)
    neighbors = [
        spectrum[(py + dy) % grid.ny, (px + dx) % grid.nx]
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
        if (dy, dx) != (0, 0)
    ]
    # Fringeless inputs leave only fp leakage in the sideband disk, many
    # orders below the DC term of any nonnegative intensity image.
    prominent = spectrum[py, px] >= 1e-12 * spectrum[0, 0] and spectrum[0, 0] > 0.0
    if spectrum[py, px] < max(neighbors) or not prominent:
        raise ValueError("carrier peak not found near the nominal fringe frequency")


def _sideband_window(grid: Grid2D, radius: float) -> np.ndarray:
    """Circular low-pass of the given radius with a raised-cosine edge
    over its outer 20%, centered on zero frequency."""
    fx = np.fft.fftfreq(grid.nx, d=grid.pitch)[np.newaxis, :]
    fy = np.fft.fftfreq(grid.ny, d=grid.pitch)[:, np.newaxis]
    f = np.hypot(fx, fy)
    inner = 0.8 * radius
    t = np.clip((f - inner) / (radius - inner), 0.0, 1.0)
    return np.where(f <= radius, np.cos(0.5 * np.pi * t) ** 2, 0.0)


def reconstruct_sideband(hologram: ScalarField2D, params: HologramParams) -> ComplexField2D:
    """Estimate the object wave from the sideband of an off-axis hologram.

    The returned field's phase equals the object phase over the passband;
    the global offset is fixed by zeroing the mean phase of the brightest
    10% of pixels.

    Raises
    ------
    ValueError
        If the Nyquist invariant fails, the hologram has invalid pixels,
        no carrier peak lies within 2 bins of the nominal frequency, or
        the mask radius exceeds a third of the carrier frequency (it
        would overlap the autocorrelation band).
    """
    grid = hologram.grid
    _check_nyquist(grid, params)
    if not hologram.all_valid():
        raise ValueError("hologram has invalid pixels")
    radius = params.mask_radius()
    if radius > params.carrier_frequency / 3.0 * (1.0 + 1e-9):
        raise ValueError(
            f"sideband mask radius {radius:g} 1/m overlaps the autocorrelation band; "
            f"at most a third of the carrier frequency ({params.carrier_frequency / 3.0:g} 1/m) separates"
        )
    _locate_carrier_peak(hologram, params)
    demodulated = hologram.values * _carrier_wave(grid, params)
    spectrum = np.fft.fft2(demodulated) * _sideband_window(grid, radius)
    field = np.fft.ifft2(spectrum) / params.reference_amplitude
    amp = np.abs(field)
    cut = np.quantile(amp, 0.9)
    bright = field[amp >= cut]
    mean_phasor = np.sum(bright / np.abs(bright))
    if mean_phasor != 0.0:
        field = field * np.conj(mean_phasor / abs(mean_phasor))
    return ComplexField2D(grid, field)


def phase_map(field: ComplexField2D, amplitude_floor: float = 0.05) -> ScalarField2D:
    """Wrapped argument of the field; pixels dimmer than `amplitude_floor`
    times the peak amplitude are flagged invalid (phase undefined near
    nulls) and carry value zero.
    """
    if not 0.0 < amplitude_floor < 1.0:
        raise ValueError(f"amplitude floor must be in (0, 1), got {amplitude_floor!r}")
    amp = np.abs(field.amplitudes)
    valid = amp >= amplitude_floor * np.max(amp)
    values = np.where(valid, wrap_phase(np.angle(field.amplitudes)), 0.0)
    if np.all(valid):
        return ScalarField2D(field.grid, values)
    return ScalarField2D(field.grid, values, valid)
