"""Scenario config parsing: unit suffix enforcement, defaults, and the
collect-every-violation contract."""

import math

import pytest

from evortex.config import (
    ConfigError,
    DeviceElement,
    IdealElement,
    MonopoleElement,
    load_scenario,
    parse_scenario,
)
from evortex.wave import max_propagation_distance

BASE = """\
[beam]
voltage = 300 kV

[grid]
nx = 64
ny = 64
fov = 1.28 um

[propagation]
defocus = 1 mm
"""


def _with(extra: str) -> str:
    return BASE + "\n" + extra


def _violations(text: str) -> list[str]:
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(text)
    return excinfo.value.violations


def test_minimal_config_and_defaults():
    cfg = parse_scenario(BASE)
    assert cfg.beam.accelerating_voltage == 3e5
    assert cfg.grid.shape == (64, 64)
    assert cfg.grid.pitch == pytest.approx(20e-9)
    assert cfg.defocus == (1e-3,)
    assert cfg.waist == pytest.approx(0.25 * 1.28e-6)
    assert cfg.source_center == (0.0, 0.0)
    assert cfg.element is None
    assert cfg.hologram is None
    assert cfg.ell_max == 10
    assert cfg.loop_radius == pytest.approx(1.28e-6 / 6)
    assert cfg.amplitude_floor == 0.05
    assert cfg.analysis_center is None
    assert cfg.figures is True
    assert cfg.text == BASE


def test_full_config():
    text = _with(
        """\
[source]
waist = 100 nm
center = 10 nm, -20 nm

[element]
kind = ideal
ell = 5
center = 0 nm, 0 nm

[hologram]
fringe_spacing = 60 nm
carrier_angle = 45 deg
reference_amplitude = 0.8

[analysis]
ell_max = 12
loop_radius = 300 nm
amplitude_floor = 0.1
center = 5 nm, 5 nm

[report]
figures = no
"""
    )
    cfg = parse_scenario(text)
    assert cfg.waist == pytest.approx(100e-9)
    assert cfg.source_center == (pytest.approx(10e-9), pytest.approx(-20e-9))
    assert cfg.element == IdealElement(5, (0.0, 0.0))
    assert cfg.hologram is not None
    assert cfg.hologram.fringe_spacing == pytest.approx(60e-9)
    assert cfg.hologram.fringe_angle == pytest.approx(math.pi / 4, rel=1e-15)
    assert cfg.hologram.reference_amplitude == 0.8
    assert cfg.ell_max == 12
    assert cfg.loop_radius == pytest.approx(300e-9)
    assert cfg.amplitude_floor == 0.1
    assert cfg.analysis_center == (pytest.approx(5e-9), pytest.approx(5e-9))
    assert cfg.figures is False


def test_comments_and_blank_lines_ignored():
    text = BASE.replace("[grid]", "# grid block\n\n[grid]")
    assert parse_scenario(text).grid.shape == (64, 64)


def test_load_scenario_reads_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE)
    assert load_scenario(path).defocus == (1e-3,)


def test_every_violation_is_collected():
    text = """\
[beam]
voltage = 300
voltage = 200 kV

[grid]
nx = 64.5
ny = 64
fov = 1.28 um

[propagation]
defocus = 1 mm

[report]
figures = maybe

[mystery]
key = 1
"""
    violations = _violations(text)
    joined = "\n".join(violations)
    assert len(violations) >= 5
    assert "voltage suffix" in joined
    assert "duplicate key 'voltage'" in joined
    assert "expected an integer, got '64.5'" in joined
    assert "expected yes|no" in joined
    assert "unknown section [mystery]" in joined


def test_error_message_lists_violations_line_by_line():
    with pytest.raises(ConfigError) as excinfo:
        parse_scenario(BASE.replace("300 kV", "300"))
    message = str(excinfo.value)
    assert message.startswith("invalid configuration:")
    assert "\n  - [beam] voltage:" in message


@pytest.mark.parametrize(
    "bad,needle",
    [
        ("voltage = 300", "voltage suffix"),
        ("voltage = 300 nm", "unknown voltage suffix 'nm'"),
        ("voltage = 300 kv", "unknown voltage suffix 'kv'"),
        ("voltage = three kV", "cannot parse number 'three'"),
        ("voltage = nan kV", "non-finite"),
        ("voltage = -1 kV", "voltage"),
    ],
)
def test_voltage_violations(bad, needle):
    joined = "\n".join(_violations(BASE.replace("voltage = 300 kV", bad)))
    assert needle in joined


def test_missing_sections_reported():
    violations = _violations("[beam]\nvoltage = 300 kV\n")
    joined = "\n".join(violations)
    assert "missing required section [grid]" in joined
    assert "missing required section [propagation]" in joined


def test_missing_keys_reported():
    violations = _violations(BASE.replace("fov = 1.28 um\n", ""))
    assert any("fov" in v and "missing" in v for v in violations)


def test_unknown_key_names_line():
    violations = _violations(_with("[report]\nfigures = yes\ncolor = red\n"))
    assert any(v.startswith("line ") and "unknown key 'color'" in v for v in violations)


def test_key_before_section():
    violations = _violations("voltage = 300 kV\n" + BASE)
    assert any("before any [section]" in v for v in violations)


def test_not_a_pair_line():
    violations = _violations(_with("[report]\nfigures\n"))
    assert any("not a key = value pair" in v for v in violations)


def test_empty_value():
    violations = _violations(_with("[report]\nfigures =\n"))
    assert any("empty value" in v for v in violations)


def test_duplicate_section():
    violations = _violations(_with("[beam]\nvoltage = 200 kV\n"))
    assert any("duplicate section [beam]" in v for v in violations)


def test_grid_too_small():
    violations = _violations(BASE.replace("nx = 64", "nx = 8"))
    assert any("at least 16x16" in v for v in violations)


def test_defocus_list():
    cfg = parse_scenario(BASE.replace("defocus = 1 mm", "defocus = 1 mm, 2 mm, -0.5 mm"))
    assert cfg.defocus == (1e-3, 2e-3, -0.5e-3)


def test_defocus_trailing_comma():
    violations = _violations(BASE.replace("defocus = 1 mm", "defocus = 1 mm,"))
    assert any("length suffix" in v for v in violations)


def test_defocus_beyond_propagation_limit():
    cfg = parse_scenario(BASE)
    z_max = max_propagation_distance(cfg.grid, cfg.beam)
    text = BASE.replace("defocus = 1 mm", f"defocus = {2.0 * z_max * 1e3:.6f} mm")
    violations = _violations(text)
    assert any("propagation limit" in v for v in violations)


def test_waist_above_quarter_fov():
    violations = _violations(_with("[source]\nwaist = 400 nm\n"))
    assert any("quarter of the field of view" in v for v in violations)


def test_source_center_outside_grid():
    violations = _violations(_with("[source]\ncenter = 2 um, 0 nm\n"))
    assert any("outside the grid" in v for v in violations)


def test_monopole_element():
    cfg = parse_scenario(_with("[element]\nkind = monopole\nstrength = 2\n"))
    assert cfg.element == MonopoleElement(2, (0.0, 0.0))


def test_monopole_requires_strength():
    violations = _violations(_with("[element]\nkind = monopole\n"))
    assert any("strength" in v and "required" in v for v in violations)


def test_monopole_strength_must_be_integer():
    violations = _violations(_with("[element]\nkind = monopole\nstrength = 1.5\n"))
    assert any("expected an integer" in v for v in violations)


def test_ideal_element_requires_ell():
    violations = _violations(_with("[element]\nkind = ideal\n"))
    assert any("ell" in v and "required" in v for v in violations)


def test_element_kind_required():
    violations = _violations(_with("[element]\nell = 5\n"))
    assert any("kind" in v and "missing" in v for v in violations)


def test_element_unknown_kind():
    violations = _violations(_with("[element]\nkind = hologram\n"))
    assert any("unknown kind 'hologram'" in v for v in violations)


def test_element_keys_must_match_kind():
    violations = _violations(_with("[element]\nkind = ideal\nell = 5\ngap = 1 nm\n"))
    assert any("does not apply to kind = ideal" in v for v in violations)


DEVICE = """\
[element]
kind = device
gap = 200 nm
wire_width = 20 nm
length = 15 um
"""


def test_device_with_density():
    cfg = parse_scenario(_with(DEVICE + "density = 38.75 pC/m\n"))
    assert isinstance(cfg.element, DeviceElement)
    assert cfg.element.gap == pytest.approx(200e-9)
    assert cfg.element.wire_width == pytest.approx(20e-9)
    assert cfg.element.length == pytest.approx(15e-6)
    assert cfg.element.resolved_density() == pytest.approx(3.875e-11)


def test_device_with_voltage_and_kappa():
    cfg = parse_scenario(_with(DEVICE + "voltage = 2 V\nkappa = 1.5e-2 nC/m/V\n"))
    assert isinstance(cfg.element, DeviceElement)
    assert cfg.element.resolved_density() == pytest.approx(3e-11)


def test_device_without_control_resolves_none():
    cfg = parse_scenario(_with(DEVICE))
    assert isinstance(cfg.element, DeviceElement)
    assert cfg.element.resolved_density() is None


def test_device_rejects_density_plus_voltage():
    violations = _violations(
        _with(DEVICE + "density = 1 pC/m\nvoltage = 2 V\nkappa = 1 pC/m/V\n")
    )
    assert any("not both" in v for v in violations)


def test_device_voltage_needs_kappa():
    violations = _violations(_with(DEVICE + "voltage = 2 V\n"))
    assert any("given together" in v for v in violations)


def test_device_requires_geometry():
    violations = _violations(_with("[element]\nkind = device\ngap = 200 nm\n"))
    joined = "\n".join(violations)
    assert "wire_width" in joined and "length" in joined


def test_device_wrong_density_suffix():
    violations = _violations(_with(DEVICE + "density = 1 nm\n"))
    assert any("line charge density suffix" in v for v in violations)


def test_hologram_below_nyquist():
    violations = _violations(_with("[hologram]\nfringe_spacing = 30 nm\n"))
    assert any("Nyquist" in v for v in violations)


def test_hologram_angle_in_radians():
    cfg = parse_scenario(
        _with("[hologram]\nfringe_spacing = 60 nm\ncarrier_angle = 0.5 rad\n")
    )
    assert cfg.hologram is not None
    assert cfg.hologram.fringe_angle == 0.5


def test_reference_amplitude_must_be_dimensionless():
    violations = _violations(
        _with("[hologram]\nfringe_spacing = 60 nm\nreference_amplitude = 1 V\n")
    )
    assert any("dimensionless" in v for v in violations)


@pytest.mark.parametrize(
    "extra,needle",
    [
        ("[analysis]\nell_max = 0\n", "at least 1"),
        ("[analysis]\nloop_radius = -1 nm\n", "positive"),
        ("[analysis]\namplitude_floor = 1.5\n", "(0, 1)"),
    ],
)
def test_analysis_bounds(extra, needle):
    violations = _violations(_with(extra))
    assert any(needle in v for v in violations)


@pytest.mark.parametrize("text,value", [("yes", True), ("on", True), ("false", False)])
def test_boolean_spellings(text, value):
    cfg = parse_scenario(_with(f"[report]\nfigures = {text}\n"))
    assert cfg.figures is value
