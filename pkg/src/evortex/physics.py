"""Physical constants and electron beam parameters.

Constants are CODATA 2018 values embedded as literals. hbar is computed
from h so the h/2pi relation is exact in floating point; everything else
is a literal with at least nine significant digits.

The beam model is a monoenergetic electron accelerated through V volts,
with the relativistic de Broglie wavelength and the phase-per-projected-
potential coupling constant sigma used by all electrostatic phase masks:

    phase(x, y) = -sigma * integral Phi(x, y, z) dz
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "PLANCK_H",
    "HBAR",
    "ELECTRON_CHARGE",
    "ELECTRON_MASS",
    "MU0",
    "EPSILON0",
    "SPEED_OF_LIGHT",
    "PhysicalConstants",
    "BeamParameters",
    "relativistic_wavelength",
    "lorentz_factor",
    "interaction_constant",
]

PLANCK_H = 6.62607015e-34        # J s (exact)
HBAR = PLANCK_H / (2.0 * math.pi)  # J s, exact h/2pi by construction
ELECTRON_CHARGE = 1.602176634e-19  # C (exact)
ELECTRON_MASS = 9.1093837015e-31   # kg
MU0 = 1.25663706212e-6             # T m / A
EPSILON0 = 8.8541878128e-12        # F / m
SPEED_OF_LIGHT = 299792458.0       # m / s (exact)


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the constants used by the phase computations."""

    planck_h: float = PLANCK_H
    hbar: float = HBAR
    electron_charge_e: float = ELECTRON_CHARGE
    electron_mass_m: float = ELECTRON_MASS
    mu0: float = MU0
    epsilon0: float = EPSILON0
    c: float = SPEED_OF_LIGHT

    def validate(self) -> None:
        """Check internal consistency of the stored values."""
        if abs(self.hbar * 2.0 * math.pi / self.planck_h - 1.0) > 1e-15:
            raise ValueError("hbar is not h/2pi")
        if abs(self.mu0 * self.epsilon0 * self.c**2 - 1.0) > 1e-12:
            raise ValueError("mu0*epsilon0*c^2 deviates from 1")


CONSTANTS = PhysicalConstants()


def lorentz_factor(v_acc: float) -> float:
    """Lorentz factor gamma = 1 + eV/(m c^2) for an electron at rest
    accelerated through v_acc volts."""
    if v_acc <= 0.0:
        raise ValueError(f"accelerating voltage must be positive, got {v_acc!r}")
    rest = ELECTRON_MASS * SPEED_OF_LIGHT**2
    return 1.0 + ELECTRON_CHARGE * v_acc / rest


def relativistic_wavelength(v_acc: float) -> float:
    """Relativistic de Broglie wavelength of an electron accelerated
    through v_acc volts.

    Parameters
    ----------
    v_acc : float
        Accelerating voltage in volts, > 0.

    Returns
    -------
    float
        Wavelength in meters:
        h / sqrt(2 m e V (1 + e V / (2 m c^2))).
    """
    if v_acc <= 0.0:
        raise ValueError(f"accelerating voltage must be positive, got {v_acc!r}")
    ev = ELECTRON_CHARGE * v_acc
    rest = ELECTRON_MASS * SPEED_OF_LIGHT**2
    p = math.sqrt(2.0 * ELECTRON_MASS * ev * (1.0 + ev / (2.0 * rest)))
    return PLANCK_H / p


def interaction_constant(v_acc: float) -> float:
    """Coupling constant sigma between projected electrostatic potential
    and electron phase, phase = -sigma * integral(Phi dz).

    Relativistic form sigma = 2 pi gamma m e lambda / h^2, equivalently
    gamma m e / (hbar p0) with p0 = h / lambda.

    Parameters
    ----------
    v_acc : float
        Accelerating voltage in volts, > 0.

    Returns
    -------
    float
        sigma in radians per volt meter.
    """
    lam = relativistic_wavelength(v_acc)
    gamma = lorentz_factor(v_acc)
    return (
        2.0
        * math.pi
        * gamma
        * ELECTRON_MASS
        * ELECTRON_CHARGE
        * lam
        / PLANCK_H**2
    )


@dataclass(frozen=True)
class BeamParameters:
    """Electron beam at a fixed accelerating voltage.

    The derived fields are pure functions of the voltage; reconstructing
    from the same voltage reproduces them bit for bit.
    """

    accelerating_voltage: float
    wavelength: float = field(init=False)
    interaction_constant: float = field(init=False)
    momentum: float = field(init=False)

    def __post_init__(self) -> None:
        lam = relativistic_wavelength(self.accelerating_voltage)
        object.__setattr__(self, "wavelength", lam)
        object.__setattr__(
            self, "interaction_constant", interaction_constant(self.accelerating_voltage)
        )
        object.__setattr__(self, "momentum", PLANCK_H / lam)

    @property
    def gamma(self) -> float:
        return lorentz_factor(self.accelerating_voltage)


if __name__ == "__main__":
    CONSTANTS.validate()
    for kv in (80e3, 100e3, 200e3, 300e3):
        b = BeamParameters(kv)
        print(
            f"{kv / 1e3:6.0f} kV  lambda = {b.wavelength:.6e} m   "
            f"sigma = {b.interaction_constant:.6e} rad/(V m)"
        )
