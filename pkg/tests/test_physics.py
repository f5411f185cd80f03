import math

import numpy as np
import pytest

from evortex.physics import (
    BeamParameters,
    CONSTANTS,
    ELECTRON_CHARGE,
    ELECTRON_MASS,
    PLANCK_H,
    SPEED_OF_LIGHT,
    interaction_constant,
    lorentz_factor,
    relativistic_wavelength,
)

# Frozen from a 40-digit mpmath evaluation of the closed forms
# lambda = h / sqrt(2 m e V (1 + e V / (2 m c^2))) and
# sigma = 2 pi gamma m e lambda / h^2 with the same CODATA 2018 inputs.
WAVELENGTH_ORACLE = {
    80e3: 4.1757160772834212e-12,
    100e3: 3.7014366137818112e-12,
    200e3: 2.5079340450548003e-12,
    300e3: 1.9687489006848796e-12,
}
SIGMA_ORACLE = {
    80e3: 1.008706599141285e7,
    100e3: 9.2439581706073734e6,
    200e3: 7.2884010409585944e6,
    300e3: 6.5261614217216303e6,
}


def test_constants_consistency():
    CONSTANTS.validate()


def test_hbar_matches_h():
    assert abs(CONSTANTS.hbar * 2.0 * math.pi / PLANCK_H - 1.0) <= 1e-15


def test_vacuum_constants_match_speed_of_light():
    assert abs(CONSTANTS.mu0 * CONSTANTS.epsilon0 * SPEED_OF_LIGHT**2 - 1.0) <= 1e-12


@pytest.mark.parametrize("volts,expected", sorted(WAVELENGTH_ORACLE.items()))
def test_wavelength_oracle(volts, expected):
    assert relativistic_wavelength(volts) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("volts,expected", sorted(SIGMA_ORACLE.items()))
def test_interaction_constant_oracle(volts, expected):
    assert interaction_constant(volts) == pytest.approx(expected, rel=1e-12)


def test_wavelength_nonrelativistic_limit():
    volts = 1.0
    classical = PLANCK_H / math.sqrt(2.0 * ELECTRON_MASS * ELECTRON_CHARGE * volts)
    correction = 1.0 / math.sqrt(1.0 + ELECTRON_CHARGE * volts / (2.0 * ELECTRON_MASS * SPEED_OF_LIGHT**2))
    assert relativistic_wavelength(volts) == pytest.approx(classical * correction, rel=1e-14)
    assert relativistic_wavelength(volts) < classical


def test_wavelength_decreases_with_voltage():
    volts = np.array([1e3, 1e4, 1e5, 3e5, 1e6])
    lams = [relativistic_wavelength(v) for v in volts]
    assert all(a > b for a, b in zip(lams, lams[1:]))


@pytest.mark.parametrize("bad", [0.0, -100.0])
def test_invalid_voltage_rejected(bad):
    with pytest.raises(ValueError):
        relativistic_wavelength(bad)
    with pytest.raises(ValueError):
        lorentz_factor(bad)


def test_beam_parameters_derived_fields():
    beam = BeamParameters(300e3)
    assert beam.wavelength == pytest.approx(WAVELENGTH_ORACLE[300e3], rel=1e-12)
    assert beam.interaction_constant == pytest.approx(SIGMA_ORACLE[300e3], rel=1e-12)
    assert beam.momentum == pytest.approx(PLANCK_H / beam.wavelength, rel=1e-15)
    assert beam.gamma == pytest.approx(1.5870853550721620, rel=1e-14)
