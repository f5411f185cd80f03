"""Report figures: OAM spectrum bars and radial intensity profiles.

Rendering is pinned to the Agg backend and PNG metadata that varies
between runs is stripped, so figure files are byte-reproducible and can
be checksummed in the run manifest like every other output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import OamSpectrum  # noqa: E402

__all__ = ["save_spectrum_figure", "save_profile_figure"]

_SAVE = {"dpi": 150, "metadata": {"Software": None}}


def save_spectrum_figure(path: Union[str, Path], spectrum: OamSpectrum) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    try:
        ax.bar(spectrum.ells(), spectrum.weights, color="#3465a4", width=0.8)
        ax.set_xlabel("orbital angular momentum  $\\ell$")
        ax.set_ylabel("weight $P_\\ell$")
        ax.set_ylim(0.0, 1.05)
        ax.set_title(f"OAM spectrum (remainder {spectrum.remainder:.3g})")
        fig.tight_layout()
        fig.savefig(path, **_SAVE)
    finally:
        plt.close(fig)


def save_profile_figure(
    path: Union[str, Path],
    radii: Sequence[float],
    values: Sequence[float],
    core_radius: Optional[float] = None,
    label: str = "",
) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    try:
        ax.plot([r * 1e9 for r in radii], values, color="#204a87")
        if core_radius is not None:
            ax.axvline(core_radius * 1e9, color="#a40000", linestyle="--", linewidth=1.0)
        ax.set_xlabel("radius [nm]")
        ax.set_ylabel("mean intensity")
        ax.set_ylim(bottom=0.0)
        if label:
            ax.set_title(label)
        fig.tight_layout()
        fig.savefig(path, **_SAVE)
    finally:
        plt.close(fig)
