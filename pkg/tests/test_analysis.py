"""OAM spectra, core metrology, and calibration, checked against closed
forms (ring-mode radii, dipole-limit densities) and exact symmetries."""

import numpy as np
import pytest

from evortex.analysis import (
    CalibrationResult,
    OamSpectrum,
    calibrate,
    core_radius,
    mean_oam,
    oam_spectrum,
    radial_profile,
)
from evortex.grids import ComplexField2D, Grid2D, ScalarField2D
from evortex.physics import EPSILON0, BeamParameters
from evortex.sources import (
    DeviceGeometry,
    LineChargeSegment,
    device_phase_mask,
    effective_topological_charge,
    ideal_azimuthal_phase,
    two_wire_device,
)
from evortex.topology import LoopSpec, winding_number
from evortex.wave import apply_phase_mask, make_gaussian

BEAM = BeamParameters(accelerating_voltage=300e3)
GRID = Grid2D.centered(512, 512, 2e-9)


def _vortex(ell, waist, center=(0.0, 0.0)):
    """Gaussian times exp(i ell phi), built directly so the waist is not
    bound by the source-op field-of-view precondition."""
    x, y = GRID.mesh()
    rho = np.hypot(x - center[0], y - center[1])
    phi = np.arctan2(y - center[1], x - center[0])
    return ComplexField2D(GRID, np.exp(-((rho / waist) ** 2)) * np.exp(1j * ell * phi))


def _ring_mode(waist):
    x, y = GRID.mesh()
    rho = np.hypot(x, y)
    values = (rho / waist) * np.exp(-((rho / waist) ** 2)) * np.exp(1j * np.arctan2(y, x))
    return ComplexField2D(GRID, values)


# ------------------------------------------------------------ spectrum type

def test_spectrum_type_validation():
    with pytest.raises(ValueError, match="empty"):
        OamSpectrum(2, 1, np.array([]), 0.0)
    with pytest.raises(ValueError, match="weights"):
        OamSpectrum(-1, 1, np.array([0.5, 0.5]), 0.0)
    with pytest.raises(ValueError, match="negative"):
        OamSpectrum(-1, 1, np.array([0.6, 0.5, -0.1]), 0.0)
    with pytest.raises(ValueError, match="sum"):
        OamSpectrum(-1, 1, np.array([0.3, 0.3, 0.3]), 0.0)
    sp = OamSpectrum(-1, 1, np.array([0.25, 0.5, 0.25]), 0.0)
    assert sp.weight(0) == 0.5
    np.testing.assert_array_equal(sp.ells(), [-1, 0, 1])
    with pytest.raises(ValueError, match="outside"):
        sp.weight(2)


def test_spectrum_tolerates_remainder_within_budget():
    sp = OamSpectrum(0, 0, np.array([0.9]), 0.1)
    assert sp.remainder == 0.1


# ------------------------------------------------------- spectrum operation

def test_gaussian_concentrates_at_zero():
    sp = oam_spectrum(_vortex(0, 120 * GRID.pitch), (0.0, 0.0), 10)
    assert sp.weight(0) > 0.999
    assert float(np.sum(sp.weights)) + sp.remainder == pytest.approx(1.0, abs=1e-9)


def test_masked_gaussian_concentrates_at_five():
    psi = apply_phase_mask(
        make_gaussian(GRID, waist=120 * GRID.pitch), ideal_azimuthal_phase(5, GRID, (0.0, 0.0))
    )
    sp = oam_spectrum(psi, (0.0, 0.0), 10)
    assert sp.weight(5) > 0.99


@pytest.mark.parametrize("ell", [-30, -13, -7, -1, 1, 2, 7, 13, 21, 30])
def test_purity_under_ideal_mask(ell):
    sp = oam_spectrum(_vortex(ell, 180 * GRID.pitch), (0.0, 0.0), 30)
    assert sp.weight(ell) > 0.99
    assert np.all(sp.weights >= 0.0)
    assert float(np.sum(sp.weights)) + sp.remainder == pytest.approx(1.0, abs=1e-9)


def test_spectrum_normalization_for_arbitrary_field():
    rng = np.random.default_rng(42)
    values = rng.standard_normal(GRID.shape) + 1j * rng.standard_normal(GRID.shape)
    sp = oam_spectrum(ComplexField2D(GRID, values), (3e-9, -5e-9), 12)
    assert np.all(sp.weights >= 0.0)
    assert float(np.sum(sp.weights)) + sp.remainder == pytest.approx(1.0, abs=1e-9)
    assert sp.remainder > 0.0


def test_conjugation_mirrors_spectrum():
    beam = _vortex(5, 120 * GRID.pitch, center=(3e-9, -2e-9))
    conj = ComplexField2D(GRID, np.conj(beam.amplitudes))
    sa = oam_spectrum(beam, (3e-9, -2e-9), 8)
    sb = oam_spectrum(conj, (3e-9, -2e-9), 8)
    np.testing.assert_allclose(sb.weights[::-1], sa.weights, atol=1e-12)


def test_default_center_is_dominant_vortex():
    sp = oam_spectrum(_vortex(3, 120 * GRID.pitch, center=(8e-9, 5e-9)), None, 6)
    assert sp.weight(3) > 0.99


def test_default_center_falls_back_to_centroid():
    # No vortex anywhere: the centroid of an offset Gaussian still lands
    # on the beam axis.
    sp = oam_spectrum(_vortex(0, 100 * GRID.pitch, center=(40e-9, -20e-9)), None, 5)
    assert sp.weight(0) > 0.999


def test_spectrum_preconditions():
    beam = _vortex(1, 120 * GRID.pitch)
    with pytest.raises(ValueError, match="ell_max"):
        oam_spectrum(beam, (0.0, 0.0), 0)
    with pytest.raises(ValueError, match="outside"):
        oam_spectrum(beam, (2e-6, 0.0), 5)
    with pytest.raises(ValueError, match="zero"):
        oam_spectrum(ComplexField2D(GRID, np.zeros(GRID.shape, complex)), (0.0, 0.0), 5)
    with pytest.raises(ValueError, match="zero"):
        oam_spectrum(ComplexField2D(GRID, np.zeros(GRID.shape, complex)), None, 5)


def test_spectrum_resolution_error():
    tiny = Grid2D.centered(16, 16, 1e-9)
    beam = ComplexField2D(tiny, np.ones(tiny.shape, complex))
    with pytest.raises(ValueError, match="resolution"):
        oam_spectrum(beam, (0.0, 0.0), 12)
    # the same request fits on a larger disk
    assert oam_spectrum(beam, (0.0, 0.0), 10).ell_max == 10


# ---------------------------------------------------------------- mean OAM

def test_mean_oam_symmetric_is_zero():
    sp = OamSpectrum(-2, 2, np.array([0.1, 0.2, 0.4, 0.2, 0.1]), 0.0)
    assert mean_oam(sp) == 0.0


def test_mean_oam_pure_thirty():
    weights = np.zeros(61)
    weights[60] = 1.0
    assert mean_oam(OamSpectrum(-30, 30, weights, 0.0)) == 30.0


def test_mean_oam_fifty_fifty():
    sp = OamSpectrum(-1, 1, np.array([0.5, 0.0, 0.5]), 0.0)
    assert mean_oam(sp) == 0.0


def test_mean_oam_of_measured_vortex():
    sp = oam_spectrum(_vortex(7, 150 * GRID.pitch), (0.0, 0.0), 15)
    assert mean_oam(sp) == pytest.approx(7.0, abs=1e-2)


# ------------------------------------------------------------ radial profile

def test_radial_profile_constant_field():
    field = ScalarField2D(GRID, np.full(GRID.shape, 2.5))
    radii, prof = radial_profile(field, (1e-9, -3e-9))
    np.testing.assert_allclose(prof, 2.5, rtol=1e-14)
    assert radii[0] == pytest.approx(0.5 * GRID.pitch)
    np.testing.assert_allclose(np.diff(radii), GRID.pitch, rtol=1e-12)


def test_radial_profile_gaussian_matches_closed_form():
    waist = 100 * GRID.pitch
    inten = ScalarField2D(GRID, np.abs(_vortex(0, waist).amplitudes) ** 2)
    radii, prof = radial_profile(inten, (0.0, 0.0))
    expected = np.exp(-2.0 * (radii / waist) ** 2)
    keep = radii < 200 * GRID.pitch
    np.testing.assert_allclose(prof[keep], expected[keep], rtol=5e-4)


# -------------------------------------------------------------- core radius

def test_core_radius_ring_mode_closed_form():
    # I(r) ~ (r/w)^2 exp(-2 r^2 / w^2): ring at w/sqrt(2); the half-height
    # radius solves u exp(-u) = exp(-1)/4 with u = 2 (r/w)^2 (u = 0.231961).
    waist = 60 * GRID.pitch
    inten = ScalarField2D(GRID, np.abs(_ring_mode(waist).amplitudes) ** 2)
    rc = core_radius(inten, (0.0, 0.0))
    assert rc == pytest.approx(waist * np.sqrt(0.231961 / 2.0), rel=2e-3)


def test_core_radius_gaussian_has_no_core():
    inten = ScalarField2D(GRID, np.abs(_vortex(0, 100 * GRID.pitch).amplitudes) ** 2)
    with pytest.raises(ValueError, match="core"):
        core_radius(inten, (0.0, 0.0))


def test_core_radius_shallow_dip_has_no_core():
    ring = np.abs(_ring_mode(60 * GRID.pitch).amplitudes) ** 2
    lifted = ScalarField2D(GRID, ring / ring.max() + 1.2)
    with pytest.raises(ValueError, match="core"):
        core_radius(lifted, (0.0, 0.0))


def test_core_radius_needs_eight_bins():
    inten = ScalarField2D(GRID, np.abs(_ring_mode(60 * GRID.pitch).amplitudes) ** 2)
    edge = GRID.origin[0] + 4 * GRID.pitch
    with pytest.raises(ValueError, match="at least 8"):
        core_radius(inten, (edge, 0.0))


def test_core_radius_grows_with_charge():
    # Fixed envelope, growing ell: rho^|ell| pushes the ring and the
    # half-height radius outward.
    waist = 40 * GRID.pitch
    x, y = GRID.mesh()
    rho = np.hypot(x, y)
    previous = 0.0
    for ell in (1, 3, 10):
        values = (rho / waist) ** abs(ell) * np.exp(-((rho / waist) ** 2))
        rc = core_radius(ScalarField2D(GRID, values**2), (0.0, 0.0))
        assert rc > previous
        previous = rc


def test_shift_sensitivity_spreads_spectrum():
    beam = _ring_mode(60 * GRID.pitch)
    inten = ScalarField2D(GRID, np.abs(beam.amplitudes) ** 2)
    rc = core_radius(inten, (0.0, 0.0))
    centered = oam_spectrum(beam, (0.0, 0.0), 8)
    shifted = oam_spectrum(beam, (2.0 * rc, 0.0), 8)
    assert np.max(centered.weights) > 0.999
    assert np.max(shifted.weights) < 0.9


# --------------------------------------------------------------- calibration

TEMPLATE = two_wire_device(gap=200e-9, wire_width=20e-9, length=15e-6, density=1e-11)


def test_calibrate_hits_target_exactly_linearly():
    res = calibrate(TEMPLATE, BEAM, 1)
    assert isinstance(res, CalibrationResult)
    assert res.iterations == 2
    assert res.residual < 1e-9
    assert res.achieved_ell == pytest.approx(1.0, abs=1e-9)
    # dipole-limit anchor: lambda* ~ 2 pi eps0 / (sigma * separation)
    anchor = 2.0 * np.pi * EPSILON0 / (BEAM.interaction_constant * TEMPLATE.separation())
    assert res.control_value == pytest.approx(anchor, rel=1e-3)


def test_calibrate_target_zero_is_trivial():
    res = calibrate(TEMPLATE, BEAM, 0)
    assert res.control_value == 0.0
    assert res.achieved_ell == 0.0
    assert res.residual == 0.0
    assert res.iterations == 1


def test_calibrate_odd_symmetry_exact():
    plus = calibrate(TEMPLATE, BEAM, 5)
    minus = calibrate(TEMPLATE, BEAM, -5)
    assert minus.control_value == -plus.control_value


def test_calibrate_kappa_reports_volts():
    kappa = 2.5e-13
    in_charge = calibrate(TEMPLATE, BEAM, 3)
    in_volts = calibrate(TEMPLATE, BEAM, 3, kappa=kappa)
    assert in_volts.control_value == pytest.approx(in_charge.control_value / kappa, rel=1e-15)


def test_calibrate_preconditions():
    with pytest.raises(ValueError, match="100"):
        calibrate(TEMPLATE, BEAM, 101)
    with pytest.raises(ValueError, match="tolerance"):
        calibrate(TEMPLATE, BEAM, 1, tolerance=1e-9)
    with pytest.raises(ValueError, match="tolerance"):
        calibrate(TEMPLATE, BEAM, 1, tolerance=0.1)
    with pytest.raises(ValueError, match="kappa"):
        calibrate(TEMPLATE, BEAM, 1, kappa=0.0)
    with pytest.raises(ValueError, match="probe"):
        calibrate(TEMPLATE, BEAM, 1, probe_density=0.0)


def test_calibrate_degenerate_geometry():
    # Coincident opposite wires cancel exactly: zero slope.
    half = 110e-9
    pos = LineChargeSegment((0.0, half), (15e-6, half), 1e-11)
    neg = LineChargeSegment((0.0, half), (15e-6, half), -1e-11)
    dev = DeviceGeometry(pos, neg, gap=200e-9, wire_width=20e-9)
    with pytest.raises(ValueError, match="slope"):
        calibrate(dev, BEAM, 1)


def test_calibrate_uncharged_template_uses_default_probe():
    bare = two_wire_device(gap=200e-9, wire_width=20e-9, length=15e-6, density=0.0)
    res = calibrate(bare, BEAM, 2)
    ref = calibrate(TEMPLATE, BEAM, 2)
    assert res.control_value == pytest.approx(ref.control_value, rel=1e-12)


def test_calibration_linearity_r_squared():
    probes = np.array([1.0, 2.0, 3.0, 4.0, 5.0]) * 1e-11
    measured = np.array(
        [
            effective_topological_charge(
                two_wire_device(gap=200e-9, wire_width=20e-9, length=15e-6, density=lam),
                BEAM,
                loop_radius=800e-9,
            )
            for lam in probes
        ]
    )
    slope, intercept = np.polyfit(probes, measured, 1)
    fitted = slope * probes + intercept
    ss_res = float(np.sum((measured - fitted) ** 2))
    ss_tot = float(np.sum((measured - measured.mean()) ** 2))
    assert 1.0 - ss_res / ss_tot > 1.0 - 1e-10


def test_calibrated_mask_winding_matches_target():
    # Closed loop through the mask: calibrate, build, read the winding
    # across the flagged device strip.
    res = calibrate(TEMPLATE, BEAM, 1)
    dev = two_wire_device(
        gap=200e-9, wire_width=20e-9, length=15e-6, density=res.control_value
    )
    grid = Grid2D.centered(1024, 1024, 2e-6 / 1024)
    mask = device_phase_mask(dev, BEAM, grid)
    loop = LoopSpec(center=(0.0, 0.0), radius=600e-9, samples=1024)
    assert winding_number(mask, loop) == 1
