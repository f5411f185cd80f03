"""File-based pipeline stages behind the command line interface.

Each stage reads its inputs from the output directory and writes its
products back there, so running the stages one subcommand at a time is
byte-identical to a single `run`: the composition happens on disk, not
in memory. Every stage returns the relative names of the files it wrote.

Products:

    beam_masked.field            source wave after the element
    mask_phase.pgm[, mask_valid.pgm]
    beam_z###.field              propagated wave per defocus value
    intensity_z###.pgm, phase_z###.pgm[, phase_valid_z###.pgm]
    holo_z###.field, holo_z###.pgm          (hologram configured)
    rec_z###.field, rec_phase_z###.pgm[, rec_phase_valid_z###.pgm]
    spectrum.csv, profile_z###.csv
    spectrum.png, profile_z###.png          (figures enabled)
    manifest.json

The manifest echoes the config, the derived constants, measured results,
per-image scaling ranges, warnings, and a SHA-256 checksum of every
other product, and is itself byte-reproducible for a given config.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import os
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from . import __version__
from .analysis import beam_center, core_radius, mean_oam, oam_spectrum, radial_profile
from .config import (
    DeviceElement,
    IdealElement,
    MonopoleElement,
    ScenarioConfig,
)
from .fieldfile import read_field, write_field
from .grids import ComplexField2D, ScalarField2D
from .holography import phase_map, reconstruct_sideband, simulate_hologram
from .imaging import u16_from_phase, u16_from_range, u16_from_validity, write_pgm16
from .sources import (
    MonopoleSpec,
    device_phase_mask,
    ideal_azimuthal_phase,
    monopole_phase_analytic,
    two_wire_device,
)
from .topology import LoopSpec, winding_number
from .wave import (
    apodize,
    apply_aperture,
    apply_phase_mask,
    fresnel_propagate,
    intensity,
    make_gaussian,
)

__all__ = [
    "LOCK_NAME",
    "output_lock",
    "element_phase_mask",
    "stage_mask",
    "stage_propagate",
    "stage_hologram",
    "stage_reconstruct",
    "stage_analyze",
    "run_pipeline",
]

LOCK_NAME = "run.lock"
WINDING_SAMPLES = 1024


@contextlib.contextmanager
def output_lock(outdir: Union[str, Path]) -> Iterator[None]:
    """Exclusive claim on an output directory for the duration of a stage.

    A second process racing for the same directory fails immediately
    instead of interleaving half-written products.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lock = outdir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ValueError(
            f"{lock} exists; another run owns this directory (delete the file if it is stale)"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode("ascii"))
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            lock.unlink()


def element_phase_mask(cfg: ScenarioConfig) -> Optional[ScalarField2D]:
    """Phase mask of the configured element, or None for free propagation."""
    el = cfg.element
    if el is None:
        return None
    if isinstance(el, MonopoleElement):
        spec = MonopoleSpec(el.strength, (el.center[0], el.center[1], 0.0))
        return monopole_phase_analytic(spec, cfg.grid)
    if isinstance(el, IdealElement):
        return ideal_azimuthal_phase(el.ell, cfg.grid, el.center)
    assert isinstance(el, DeviceElement)
    density = el.resolved_density()
    if density is None:
        raise ValueError(
            "the device element has no drive; set density, or voltage together with"
            " kappa (the calibrate subcommand prints both)"
        )
    dev = two_wire_device(
        gap=el.gap, wire_width=el.wire_width, length=el.length, density=density
    )
    return device_phase_mask(dev, cfg.beam, cfg.grid)


def _require(outdir: Path, name: str, producer: str) -> Path:
    path = outdir / name
    if not path.exists():
        raise ValueError(f"{path} not found; run the {producer} stage first")
    return path


def stage_mask(cfg: ScenarioConfig, outdir: Union[str, Path]) -> list[str]:
    """Build the source wave, imprint the element, and store the result."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    mask = element_phase_mask(cfg)
    psi = make_gaussian(cfg.grid, cfg.waist, cfg.source_center)
    if mask is not None:
        write_pgm16(outdir / "mask_phase.pgm", u16_from_phase(mask.values, mask.valid_mask()))
        written.append("mask_phase.pgm")
        psi = apply_phase_mask(psi, mask)
        if not mask.all_valid():
            write_pgm16(outdir / "mask_valid.pgm", u16_from_validity(mask.valid_mask()))
            written.append("mask_valid.pgm")
            # The flagged strip is physically opaque; block it at the mask
            # plane rather than letting unshifted amplitude leak through.
            psi = apply_aperture(psi, mask.valid_mask())
    psi = apodize(psi)
    # Stored waves carry unit peak amplitude at the mask plane; the overall
    # scale of a wavefunction is arbitrary, and this keeps hologram contrast
    # against an order-one reference and image ranges sane.
    peak = float(np.abs(psi.amplitudes).max())
    if peak == 0.0:
        raise ValueError("the source wave vanished at the mask plane")
    psi = ComplexField2D(cfg.grid, psi.amplitudes / peak)
    write_field(outdir / "beam_masked.field", psi)
    written.append("beam_masked.field")
    return written


def stage_propagate(cfg: ScenarioConfig, outdir: Union[str, Path]) -> list[str]:
    """Propagate the stored masked wave to every configured defocus."""
    outdir = Path(outdir)
    psi = read_field(_require(outdir, "beam_masked.field", "mask"))
    written: list[str] = []
    for i, z in enumerate(cfg.defocus):
        psi_z = fresnel_propagate(psi, z, cfg.beam)
        write_field(outdir / f"beam_z{i:03d}.field", psi_z)
        written.append(f"beam_z{i:03d}.field")
        image, _, _ = u16_from_range(intensity(psi_z).values)
        write_pgm16(outdir / f"intensity_z{i:03d}.pgm", image)
        written.append(f"intensity_z{i:03d}.pgm")
        pm = phase_map(psi_z, cfg.amplitude_floor)
        write_pgm16(outdir / f"phase_z{i:03d}.pgm", u16_from_phase(pm.values, pm.valid_mask()))
        written.append(f"phase_z{i:03d}.pgm")
        if not pm.all_valid():
            write_pgm16(outdir / f"phase_valid_z{i:03d}.pgm", u16_from_validity(pm.valid_mask()))
            written.append(f"phase_valid_z{i:03d}.pgm")
    return written


def stage_hologram(cfg: ScenarioConfig, outdir: Union[str, Path]) -> list[str]:
    """Record an off-axis hologram of every propagated wave."""
    if cfg.hologram is None:
        return []
    outdir = Path(outdir)
    written: list[str] = []
    for i in range(len(cfg.defocus)):
        psi_z = read_field(_require(outdir, f"beam_z{i:03d}.field", "propagate"))
        holo = simulate_hologram(psi_z, cfg.hologram)
        # Real data in the complex container keeps one interchange format.
        write_field(outdir / f"holo_z{i:03d}.field", ComplexField2D(holo.grid, holo.values))
        written.append(f"holo_z{i:03d}.field")
        image, _, _ = u16_from_range(holo.values)
        write_pgm16(outdir / f"holo_z{i:03d}.pgm", image)
        written.append(f"holo_z{i:03d}.pgm")
    return written


def stage_reconstruct(cfg: ScenarioConfig, outdir: Union[str, Path]) -> list[str]:
    """Recover the complex wave from every stored hologram."""
    if cfg.hologram is None:
        return []
    outdir = Path(outdir)
    written: list[str] = []
    for i in range(len(cfg.defocus)):
        holo_c = read_field(_require(outdir, f"holo_z{i:03d}.field", "hologram"))
        holo = ScalarField2D(holo_c.grid, holo_c.amplitudes.real)
        rec = reconstruct_sideband(holo, cfg.hologram)
        write_field(outdir / f"rec_z{i:03d}.field", rec)
        written.append(f"rec_z{i:03d}.field")
        pm = phase_map(rec, cfg.amplitude_floor)
        write_pgm16(
            outdir / f"rec_phase_z{i:03d}.pgm", u16_from_phase(pm.values, pm.valid_mask())
        )
        written.append(f"rec_phase_z{i:03d}.pgm")
        if not pm.all_valid():
            write_pgm16(
                outdir / f"rec_phase_valid_z{i:03d}.pgm", u16_from_validity(pm.valid_mask())
            )
            written.append(f"rec_phase_valid_z{i:03d}.pgm")
    return written


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    import csv

    with open(path, "w", newline="", encoding="ascii") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def stage_analyze(
    cfg: ScenarioConfig,
    outdir: Union[str, Path],
    seed: int = 0,
    threads: int = 0,
) -> list[str]:
    """Measure the stored waves and write tables, figures, and the manifest."""
    outdir = Path(outdir)
    written: list[str] = []
    warnings: list[str] = []

    beam_masked = read_field(_require(outdir, "beam_masked.field", "mask"))
    center = cfg.analysis_center
    if center is None:
        center = beam_center(beam_masked)
    spectrum = oam_spectrum(beam_masked, center=center, ell_max=cfg.ell_max)
    _write_csv(
        outdir / "spectrum.csv",
        ["ell [1]", "probability [1]"],
        [[ell, float(w)] for ell, w in zip(spectrum.ells(), spectrum.weights)],
    )
    written.append("spectrum.csv")

    image_scaling: dict[str, dict[str, float]] = {}
    defocus_results = []
    for i, z in enumerate(cfg.defocus):
        tag = f"z{i:03d}"
        psi_z = read_field(_require(outdir, f"beam_{tag}.field", "propagate"))
        if cfg.hologram is not None:
            source = read_field(_require(outdir, f"rec_{tag}.field", "reconstruct"))
            holo_c = read_field(_require(outdir, f"holo_{tag}.field", "hologram"))
            lo, hi = float(holo_c.amplitudes.real.min()), float(holo_c.amplitudes.real.max())
            image_scaling[f"holo_{tag}.pgm"] = {"lo": lo, "hi": hi}
        else:
            source = psi_z

        winding: Optional[int]
        try:
            pm = phase_map(source, cfg.amplitude_floor)
            winding = winding_number(pm, LoopSpec(center, cfg.loop_radius, WINDING_SAMPLES))
        except ValueError as exc:
            warnings.append(f"defocus {z!r} m: winding unavailable: {exc}")
            winding = None

        inten = intensity(psi_z)
        image_scaling[f"intensity_{tag}.pgm"] = {
            "lo": float(inten.values.min()),
            "hi": float(inten.values.max()),
        }
        radii, profile = radial_profile(inten, center)
        _write_csv(
            outdir / f"profile_{tag}.csv",
            ["radius [m]", "mean_intensity [1]"],
            [[float(r), float(v)] for r, v in zip(radii, profile)],
        )
        written.append(f"profile_{tag}.csv")

        core: Optional[float]
        try:
            core = core_radius(inten, center)
        except ValueError as exc:
            warnings.append(f"defocus {z!r} m: core radius unavailable: {exc}")
            core = None
        # Ring means, not single pixels: a mask's singular center pixel is
        # blocked at the aperture, and that one hole must not read as a core.
        peak = float(np.max(profile))
        central = float(profile[0]) / peak if peak > 0.0 else 0.0

        defocus_results.append(
            {
                "distance_m": float(z),
                "winding": winding,
                "core_radius_m": core,
                "central_intensity_fraction": central,
            }
        )
        if cfg.figures:
            from .figures import save_profile_figure

            save_profile_figure(
                outdir / f"profile_{tag}.png",
                radii,
                profile,
                core_radius=core,
                label=f"defocus {z * 1e3:g} mm",
            )
            written.append(f"profile_{tag}.png")

    if cfg.figures:
        from .figures import save_spectrum_figure

        save_spectrum_figure(outdir / "spectrum.png", spectrum)
        written.append("spectrum.png")

    hologram_echo = None
    if cfg.hologram is not None:
        hologram_echo = {
            "fringe_spacing_m": cfg.hologram.fringe_spacing,
            "fringe_angle_rad": cfg.hologram.fringe_angle,
            "reference_amplitude": cfg.hologram.reference_amplitude,
            "sideband_mask_radius_cycles_per_m": cfg.hologram.mask_radius(),
        }

    manifest = {
        "version": __version__,
        "config_text": cfg.text,
        "constants": {
            "electron_wavelength_m": cfg.beam.wavelength,
            "interaction_constant_rad_per_V_m": cfg.beam.interaction_constant,
        },
        "flags": {"seed": int(seed), "threads": int(threads)},
        "hologram": hologram_echo,
        "results": {
            "analysis_center_m": [center[0], center[1]],
            "spectrum": {
                "ell_min": spectrum.ell_min,
                "ell_max": spectrum.ell_max,
                "weights": [float(w) for w in spectrum.weights],
                "remainder": spectrum.remainder,
                "mean_oam": mean_oam(spectrum),
            },
            "defocus": defocus_results,
        },
        "image_scaling": image_scaling,
        "warnings": warnings,
        "outputs": {},
    }
    names = sorted(
        p.name
        for p in outdir.iterdir()
        if p.is_file() and p.name not in ("manifest.json", LOCK_NAME)
    )
    manifest["outputs"] = {name: _sha256(outdir / name) for name in names}
    text = json.dumps(manifest, sort_keys=True, indent=2, allow_nan=False) + "\n"
    (outdir / "manifest.json").write_text(text, encoding="utf-8")
    written.append("manifest.json")
    return written


def run_pipeline(
    cfg: ScenarioConfig,
    outdir: Union[str, Path],
    seed: int = 0,
    threads: int = 0,
) -> list[str]:
    """All stages in order; byte-identical to running them one at a time."""
    written = stage_mask(cfg, outdir)
    written += stage_propagate(cfg, outdir)
    written += stage_hologram(cfg, outdir)
    written += stage_reconstruct(cfg, outdir)
    written += stage_analyze(cfg, outdir, seed=seed, threads=threads)
    return written
