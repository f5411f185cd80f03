"""Scenario configuration: sectioned key = value text with mandatory unit
suffixes on every dimensioned value.

Example::

    [beam]
    voltage = 300 kV

    [grid]
    nx = 2048
    ny = 2048
    fov = 1.5 um

    [element]
    kind = device
    gap = 200 nm
    wire_width = 20 nm
    length = 15 um
    density = 3.875e-11 C/m

    [propagation]
    defocus = 25 mm

Dimensioned values require one of the unit suffixes listed per quantity
below; a bare number on a dimensioned key is rejected. Unknown sections
and keys are rejected. Validation collects every violation before
failing, so one round trip fixes a config, not one error per attempt.

Accepted suffixes: lengths nm | um | mm; voltages kV | V; line charge
density C/m | nC/m | pC/m; density per volt C/m/V | nC/m/V | pC/m/V;
angles rad | deg.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .holography import HologramParams
from .physics import BeamParameters
from .grids import Grid2D
from .sources import MonopoleSpec, two_wire_device
from .wave import max_propagation_distance

__all__ = [
    "ConfigError",
    "MonopoleElement",
    "IdealElement",
    "DeviceElement",
    "ScenarioConfig",
    "parse_scenario",
    "load_scenario",
]

_LENGTH = {"nm": 1e-9, "um": 1e-6, "mm": 1e-3}
_VOLTAGE = {"kV": 1e3, "V": 1.0}
_DENSITY = {"C/m": 1.0, "nC/m": 1e-9, "pC/m": 1e-12}
_KAPPA = {"C/m/V": 1.0, "nC/m/V": 1e-9, "pC/m/V": 1e-12}
_ANGLE = {"rad": 1.0, "deg": math.pi / 180.0}

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class ConfigError(ValueError):
    """Carries every violated constraint of a scenario config."""

    def __init__(self, violations: list[str]) -> None:
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid configuration:\n{lines}")


@dataclass(frozen=True)
class MonopoleElement:
    strength: int
    center: tuple[float, float]


@dataclass(frozen=True)
class IdealElement:
    ell: int
    center: tuple[float, float]


@dataclass(frozen=True)
class DeviceElement:
    """Two-wire device pose is canonical: tips at the origin, wires toward
    +x. The control is the density, given directly or as voltage * kappa;
    both may be absent in configs meant for the calibrate subcommand."""

    gap: float
    wire_width: float
    length: float
    density: Optional[float]
    voltage: Optional[float]
    kappa: Optional[float]

    def resolved_density(self) -> Optional[float]:
        if self.density is not None:
            return self.density
        if self.voltage is not None and self.kappa is not None:
            return self.kappa * self.voltage
        return None


Element = Union[None, MonopoleElement, IdealElement, DeviceElement]


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: every module precondition the pipeline relies on
    has been checked at construction."""

    beam: BeamParameters
    grid: Grid2D
    waist: float
    source_center: tuple[float, float]
    element: Element
    defocus: tuple[float, ...]
    hologram: Optional[HologramParams]
    ell_max: int
    loop_radius: float
    amplitude_floor: float
    analysis_center: Optional[tuple[float, float]]
    figures: bool
    text: str


_SCHEMA = {
    "beam": {"voltage"},
    "grid": {"nx", "ny", "fov"},
    "source": {"waist", "center"},
    "element": {
        "kind",
        "strength",
        "ell",
        "center",
        "gap",
        "wire_width",
        "length",
        "density",
        "voltage",
        "kappa",
    },
    "propagation": {"defocus"},
    "hologram": {"fringe_spacing", "carrier_angle", "reference_amplitude"},
    "analysis": {"ell_max", "loop_radius", "amplitude_floor", "center"},
    "report": {"figures"},
}

_ELEMENT_KEYS = {
    "none": set(),
    "monopole": {"strength", "center"},
    "ideal": {"ell", "center"},
    "device": {"gap", "wire_width", "length", "density", "voltage", "kappa"},
}


class _Reader:
    """Typed access to the parsed entries, accumulating violations."""

    def __init__(self, entries: dict[str, dict[str, str]], violations: list[str]) -> None:
        self.entries = entries
        self.violations = violations

    def fail(self, section: str, key: str, message: str) -> None:
        self.violations.append(f"[{section}] {key}: {message}")

    def raw(self, section: str, key: str) -> Optional[str]:
        return self.entries.get(section, {}).get(key)

    def require(self, section: str, key: str) -> Optional[str]:
        value = self.raw(section, key)
        if value is None:
            self.violations.append(f"[{section}] {key}: required key is missing")
        return value

    def _quantity(self, section: str, key: str, text: str, units: dict[str, float], what: str):
        parts = text.split()
        if len(parts) != 2:
            self.fail(
                section,
                key,
                f"expected a number with a {what} suffix ({'|'.join(units)}), got {text!r}",
            )
            return None
        number, unit = parts
        if unit not in units:
            self.fail(section, key, f"unknown {what} suffix {unit!r} (use {'|'.join(units)})")
            return None
        try:
            value = float(number)
        except ValueError:
            self.fail(section, key, f"cannot parse number {number!r}")
            return None
        if not math.isfinite(value):
            self.fail(section, key, f"non-finite value {number!r}")
            return None
        return value * units[unit]

    def quantity(self, section: str, key: str, units: dict[str, float], what: str):
        text = self.raw(section, key)
        if text is None:
            return None
        return self._quantity(section, key, text, units, what)

    def quantity_list(self, section: str, key: str, units: dict[str, float], what: str):
        text = self.raw(section, key)
        if text is None:
            return None
        values = []
        for part in text.split(","):
            value = self._quantity(section, key, part.strip(), units, what)
            if value is None:
                return None
            values.append(value)
        return tuple(values)

    def pair(self, section: str, key: str, units: dict[str, float], what: str):
        text = self.raw(section, key)
        if text is None:
            return None
        parts = text.split(",")
        if len(parts) != 2:
            self.fail(section, key, f"expected two comma-separated values, got {text!r}")
            return None
        x = self._quantity(section, key, parts[0].strip(), units, what)
        y = self._quantity(section, key, parts[1].strip(), units, what)
        if x is None or y is None:
            return None
        return (x, y)

    def integer(self, section: str, key: str):
        text = self.raw(section, key)
        if text is None:
            return None
        if not re.fullmatch(r"[+-]?\d+", text):
            self.fail(section, key, f"expected an integer, got {text!r}")
            return None
        return int(text)

    def number(self, section: str, key: str):
        text = self.raw(section, key)
        if text is None:
            return None
        try:
            value = float(text)
        except ValueError:
            self.fail(section, key, f"expected a dimensionless number, got {text!r}")
            return None
        if not math.isfinite(value):
            self.fail(section, key, f"non-finite value {text!r}")
            return None
        return value

    def boolean(self, section: str, key: str):
        text = self.raw(section, key)
        if text is None:
            return None
        if text in ("yes", "true", "on"):
            return True
        if text in ("no", "false", "off"):
            return False
        self.fail(section, key, f"expected yes|no, got {text!r}")
        return None


def _split_entries(text: str, violations: list[str]) -> dict[str, dict[str, str]]:
    entries: dict[str, dict[str, str]] = {}
    section: Optional[str] = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                violations.append(f"line {lineno}: unknown section [{section}]")
                entries.setdefault(section, {})
            elif section in entries:
                violations.append(f"line {lineno}: duplicate section [{section}]")
            else:
                entries[section] = {}
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: not a key = value pair: {line!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if section is None:
            violations.append(f"line {lineno}: key {key!r} before any [section]")
            continue
        if not _KEY_RE.fullmatch(key):
            violations.append(f"line {lineno}: malformed key {key!r}")
            continue
        if section in _SCHEMA and key not in _SCHEMA[section]:
            violations.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
            continue
        if not value:
            violations.append(f"line {lineno}: empty value for key {key!r}")
            continue
        if key in entries.setdefault(section, {}):
            violations.append(f"line {lineno}: duplicate key {key!r} in section [{section}]")
            continue
        entries[section][key] = value
    return entries


def _read_element(reader: _Reader) -> Element:
    if "element" not in reader.entries:
        return None
    kind = reader.require("element", "kind")
    if kind is None:
        return None
    if kind not in _ELEMENT_KEYS:
        reader.fail("element", "kind", f"unknown kind {kind!r} (none|monopole|ideal|device)")
        return None
    allowed = _ELEMENT_KEYS[kind] | {"kind"}
    for key in sorted(reader.entries["element"]):
        if key not in allowed:
            reader.fail("element", key, f"does not apply to kind = {kind}")
    if kind == "none":
        return None
    if kind == "monopole":
        strength = reader.integer("element", "strength")
        if reader.raw("element", "strength") is None:
            reader.fail("element", "strength", "required for monopole elements")
        center = reader.pair("element", "center", _LENGTH, "length") or (0.0, 0.0)
        if strength is None:
            return None
        try:
            MonopoleSpec(strength, (center[0], center[1], 0.0))
        except ValueError as exc:
            reader.fail("element", "strength", str(exc))
            return None
        return MonopoleElement(strength, center)
    if kind == "ideal":
        ell = reader.integer("element", "ell")
        if reader.raw("element", "ell") is None:
            reader.fail("element", "ell", "required for ideal elements")
        center = reader.pair("element", "center", _LENGTH, "length") or (0.0, 0.0)
        if ell is None:
            return None
        return IdealElement(ell, center)
    gap = reader.quantity("element", "gap", _LENGTH, "length")
    width = reader.quantity("element", "wire_width", _LENGTH, "length")
    length = reader.quantity("element", "length", _LENGTH, "length")
    for key in ("gap", "wire_width", "length"):
        if reader.raw("element", key) is None:
            reader.fail("element", key, "required for device elements")
    density = reader.quantity("element", "density", _DENSITY, "line charge density")
    voltage = reader.quantity("element", "voltage", _VOLTAGE, "voltage")
    kappa = reader.quantity("element", "kappa", _KAPPA, "density per volt")
    has_density = reader.raw("element", "density") is not None
    has_voltage = reader.raw("element", "voltage") is not None
    has_kappa = reader.raw("element", "kappa") is not None
    if has_density and (has_voltage or has_kappa):
        reader.fail("element", "density", "give density or voltage with kappa, not both")
        return None
    if has_voltage != has_kappa:
        reader.fail("element", "voltage", "voltage and kappa must be given together")
        return None
    if gap is None or width is None or length is None:
        return None
    try:
        two_wire_device(gap=gap, wire_width=width, length=length, density=density or 0.0)
    except ValueError as exc:
        reader.fail("element", "gap", str(exc))
        return None
    return DeviceElement(gap, width, length, density, voltage, kappa)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario config.

    Raises
    ------
    ConfigError
        Listing every violation found, not just the first.
    """
    violations: list[str] = []
    entries = _split_entries(text, violations)
    reader = _Reader(entries, violations)

    for section in ("beam", "grid", "propagation"):
        if section not in entries:
            violations.append(f"missing required section [{section}]")

    beam = None
    voltage = None
    if "beam" in entries:
        voltage = reader.quantity("beam", "voltage", _VOLTAGE, "voltage")
        if reader.raw("beam", "voltage") is None:
            reader.fail("beam", "voltage", "required key is missing")
        if voltage is not None:
            try:
                beam = BeamParameters(accelerating_voltage=voltage)
            except ValueError as exc:
                reader.fail("beam", "voltage", str(exc))

    grid = None
    if "grid" in entries:
        nx = reader.integer("grid", "nx")
        ny = reader.integer("grid", "ny")
        fov = reader.quantity("grid", "fov", _LENGTH, "length")
        for key in ("nx", "ny", "fov"):
            if reader.raw("grid", key) is None:
                reader.fail("grid", key, "required key is missing")
        if nx is not None and ny is not None and fov is not None:
            if nx <= 0 or fov <= 0.0:
                reader.fail("grid", "fov", "grid extent must be positive")
            else:
                try:
                    grid = Grid2D.centered(nx, ny, fov / nx)
                except ValueError as exc:
                    reader.fail("grid", "nx", str(exc))

    waist = reader.quantity("source", "waist", _LENGTH, "length")
    source_center = reader.pair("source", "center", _LENGTH, "length") or (0.0, 0.0)
    if grid is not None:
        limit = 0.25 * grid.fov[0]
        if waist is None:
            waist = limit
        elif waist > limit * (1.0 + 1e-12):
            reader.fail(
                "source", "waist", f"waist {waist:g} m exceeds a quarter of the field of view"
            )
        elif waist <= 0.0:
            reader.fail("source", "waist", "waist must be positive")
        if not grid.contains(source_center[0], source_center[1]):
            reader.fail("source", "center", "source center lies outside the grid")

    element = _read_element(reader)

    defocus = reader.quantity_list("propagation", "defocus", _LENGTH, "length")
    if "propagation" in entries and reader.raw("propagation", "defocus") is None:
        reader.fail("propagation", "defocus", "required key is missing")
    if defocus is not None and grid is not None and beam is not None:
        z_max = max_propagation_distance(grid, beam)
        for z in defocus:
            if abs(z) > z_max:
                reader.fail(
                    "propagation",
                    "defocus",
                    f"|{z:g}| m exceeds the grid's propagation limit {z_max:g} m",
                )

    hologram = None
    if "hologram" in entries:
        spacing = reader.quantity("hologram", "fringe_spacing", _LENGTH, "length")
        if reader.raw("hologram", "fringe_spacing") is None:
            reader.fail("hologram", "fringe_spacing", "required key is missing")
        angle = reader.quantity("hologram", "carrier_angle", _ANGLE, "angle")
        if angle is None and reader.raw("hologram", "carrier_angle") is None:
            angle = math.pi / 4.0
        amplitude = reader.number("hologram", "reference_amplitude")
        if amplitude is None and reader.raw("hologram", "reference_amplitude") is None:
            amplitude = 1.0
        if spacing is not None and angle is not None and amplitude is not None:
            try:
                hologram = HologramParams(
                    fringe_spacing=spacing, fringe_angle=angle, reference_amplitude=amplitude
                )
            except ValueError as exc:
                reader.fail("hologram", "fringe_spacing", str(exc))
            if grid is not None and spacing < 2.0 * grid.pitch:
                reader.fail(
                    "hologram",
                    "fringe_spacing",
                    f"{spacing:g} m is below the grid Nyquist limit {2.0 * grid.pitch:g} m",
                )

    ell_max = reader.integer("analysis", "ell_max")
    if ell_max is None and reader.raw("analysis", "ell_max") is None:
        ell_max = 10
    if ell_max is not None and ell_max < 1:
        reader.fail("analysis", "ell_max", "must be at least 1")
    loop_radius = reader.quantity("analysis", "loop_radius", _LENGTH, "length")
    if loop_radius is None and reader.raw("analysis", "loop_radius") is None and grid is not None:
        loop_radius = grid.fov[0] / 6.0
    if loop_radius is not None and loop_radius <= 0.0:
        reader.fail("analysis", "loop_radius", "must be positive")
    floor = reader.number("analysis", "amplitude_floor")
    if floor is None and reader.raw("analysis", "amplitude_floor") is None:
        floor = 0.05
    if floor is not None and not 0.0 < floor < 1.0:
        reader.fail("analysis", "amplitude_floor", "must lie in (0, 1)")
    analysis_center = reader.pair("analysis", "center", _LENGTH, "length")

    figures = reader.boolean("report", "figures")
    if figures is None and reader.raw("report", "figures") is None:
        figures = True

    if violations:
        raise ConfigError(violations)
    assert beam is not None and grid is not None and defocus is not None
    return ScenarioConfig(
        beam=beam,
        grid=grid,
        waist=waist if waist is not None else 0.25 * grid.fov[0],
        source_center=source_center,
        element=element,
        defocus=defocus,
        hologram=hologram,
        ell_max=ell_max if ell_max is not None else 10,
        loop_radius=loop_radius if loop_radius is not None else grid.fov[0] / 6.0,
        amplitude_floor=floor if floor is not None else 0.05,
        analysis_center=analysis_center,
        figures=bool(figures),
        text=text,
    )


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))
