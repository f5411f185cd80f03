"""Field sources and the phase masks they imprint on a paraxial beam.

Two source models. The magnetic monopole imparts the azimuthal phase
theta = (e mu0 q_m / h) * phi, computed both analytically and as a
Stokes-surface flux integral over a cylindrical ribbon. The electrostatic
element is a pair of oppositely charged parallel line segments (the
two-wire device); the beam picks up -sigma * integral(Phi dz), evaluated
in closed form from the antiderivative of ln sqrt((x-s)^2 + y^2).

Conventions: wires run from their tip (endpoint_a) toward endpoint_b; the
device tip is the midpoint between the two tips, and the positive wire
sits on the +y side in the standard builder, so positive charge density
gives positive topological charge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grids import Grid2D, ScalarField2D
from .physics import (
    BeamParameters,
    ELECTRON_CHARGE,
    EPSILON0,
    HBAR,
    MU0,
    PLANCK_H,
)
from .topology import wrap_phase

__all__ = [
    "CHARGE_QUANTUM",
    "MonopoleSpec",
    "QuadratureSpec",
    "LineChargeSegment",
    "DeviceGeometry",
    "monopole_b_field",
    "monopole_phase_analytic",
    "monopole_phase_numeric",
    "ideal_azimuthal_phase",
    "segment_projected_potential",
    "two_wire_device",
    "device_exclusion_zone",
    "device_phase_mask",
    "device_shadow",
    "effective_topological_charge",
]

# Monopole charge quantum h/(e*mu0) in A*m; strength n means q_m = n quanta,
# for which the analytic mask is exactly n*phi.
CHARGE_QUANTUM = PLANCK_H / (ELECTRON_CHARGE * MU0)


@dataclass(frozen=True)
class MonopoleSpec:
    """Magnetic monopole of `strength` charge quanta at `position` (meters)."""

    strength: float
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if not math.isfinite(self.strength):
            raise ValueError("monopole strength must be finite")
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))

    @property
    def magnetic_charge(self) -> float:
        """q_m in A*m."""
        return self.strength * CHARGE_QUANTUM


def monopole_b_field(spec: MonopoleSpec, points: np.ndarray) -> np.ndarray:
    """Field B = (mu0 q_m / 4 pi r^3) * r at one or many 3D points.

    Parameters
    ----------
    spec : MonopoleSpec
    points : array_like, shape (..., 3)
        Evaluation positions in meters; none may coincide with the
        monopole position.

    Returns
    -------
    ndarray, shape (..., 3), tesla
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise ValueError("points must have shape (..., 3)")
    r = pts - np.asarray(spec.position)
    dist = np.sqrt(np.sum(r * r, axis=-1))
    if np.any(dist == 0.0):
        raise ValueError("field evaluated at the monopole position")
    g = MU0 * spec.magnetic_charge / (4.0 * np.pi)
    return g * r / dist[..., np.newaxis] ** 3


def monopole_phase_analytic(spec: MonopoleSpec, grid: Grid2D) -> ScalarField2D:
    """Azimuthal phase (e mu0 q_m / h) * atan2(y - y0, x - x0), wrapped.

    A pixel that coincides with the monopole's transverse position has no
    defined azimuth and is flagged invalid.
    """
    x, y = grid.mesh()
    dx = x - spec.position[0]
    dy = y - spec.position[1]
    # e mu0 q_m / h reduces to the integer strength exactly; evaluating it
    # that way keeps theta = n * azimuth free of roundoff.
    theta = wrap_phase(float(spec.strength) * np.arctan2(dy, dx))
    hit = (dx == 0.0) & (dy == 0.0)
    if np.any(hit):
        valid = np.broadcast_to(~hit, grid.shape).copy()
        vals = np.broadcast_to(theta, grid.shape).copy()
        vals[~valid] = 0.0
        return ScalarField2D(grid, vals, valid)
    return ScalarField2D(grid, np.broadcast_to(theta, grid.shape).copy())


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor-product midpoint rule for the Stokes-surface flux.

    The infinite z extent is compactified through z = R tan(u), after which
    the on-axis integrand is proportional to cos(u). `richardson` adds one
    two-grid extrapolation step, which the midpoint rule's h^2 error term
    needs in order to reach 1e-6 relative accuracy at 512x512 panels.
    """

    panels_phi: int = 512
    panels_z: int = 512
    richardson: bool = True

    def __post_init__(self) -> None:
        if self.panels_phi < 8 or self.panels_z < 8:
            raise ValueError("quadrature needs at least 8 panels in each direction")


def _ribbon_flux_shape(spec: MonopoleSpec, phi: float, radius: float, n_phi: int, n_z: int) -> float:
    """Geometric part of the ribbon flux (unit monopole moment g = 1)."""
    a = (np.arange(n_phi) + 0.5) * (phi / n_phi)
    u = -0.5 * np.pi + (np.arange(n_z) + 0.5) * (np.pi / n_z)
    z = radius * np.tan(u)
    dz = radius / np.cos(u) ** 2 * (np.pi / n_z)
    px, py, pz = spec.position
    # Ribbon point minus monopole position, broadcast (n_phi, n_z).
    cx = radius * np.cos(a)[:, np.newaxis] - px
    cy = radius * np.sin(a)[:, np.newaxis] - py
    cz = z[np.newaxis, :] - pz
    r3 = (cx * cx + cy * cy + cz * cz) ** 1.5
    # B . rho_hat, with rho_hat the outward cylinder normal at azimuth a.
    radial = cx * np.cos(a)[:, np.newaxis] + cy * np.sin(a)[:, np.newaxis]
    return float(np.sum(radial / r3 * dz[np.newaxis, :]) * (phi / n_phi) * radius)


def monopole_phase_numeric(
    spec: MonopoleSpec,
    phi: float,
    quadrature: QuadratureSpec = QuadratureSpec(),
    surface_radius: float = 1.0,
) -> float:
    """Dirac phase at azimuth `phi` from the flux through a cylindrical
    ribbon of radius `surface_radius` spanning azimuths [0, phi] and all z.

    Returns (e/hbar) * flux; converges to the analytic strength * phi.

    Raises
    ------
    ValueError
        If phi is outside [0, 2 pi), the quadrature is under-resolved, or
        the monopole lies on the integration surface.
    """
    if not 0.0 <= phi < 2.0 * np.pi:
        raise ValueError(f"phi must lie in [0, 2 pi), got {phi!r}")
    if not surface_radius > 0.0:
        raise ValueError("surface radius must be positive")
    px, py, _ = spec.position
    rho_p = math.hypot(px, py)
    az_p = math.atan2(py, px) % (2.0 * np.pi)
    if abs(rho_p - surface_radius) <= 1e-12 * max(1.0, surface_radius) and (
        az_p <= phi + 1e-12 or az_p >= 2.0 * np.pi - 1e-12
    ):
        raise ValueError("integration surface passes through the monopole")
    if phi == 0.0:
        return 0.0
    shape = _ribbon_flux_shape(spec, phi, surface_radius, quadrature.panels_phi, quadrature.panels_z)
    if quadrature.richardson:
        half = _ribbon_flux_shape(
            spec, phi, surface_radius, max(8, quadrature.panels_phi // 2), max(8, quadrature.panels_z // 2)
        )
        shape = (4.0 * shape - half) / 3.0
    g = MU0 * spec.magnetic_charge / (4.0 * np.pi)
    return ELECTRON_CHARGE / HBAR * g * shape


def ideal_azimuthal_phase(ell: float, grid: Grid2D, center: tuple[float, float] = (0.0, 0.0)) -> ScalarField2D:
    """Idealized vortex mask ell * phi about `center`, wrapped to (-pi, pi].

    This is the limit the device mask approaches near its tip.
    """
    if not math.isfinite(ell):
        raise ValueError("ell must be finite")
    x, y = grid.mesh()
    theta = wrap_phase(ell * np.arctan2(y - center[1], x - center[0]))
    return ScalarField2D(grid, np.broadcast_to(theta, grid.shape).copy())


@dataclass(frozen=True)
class LineChargeSegment:
    """Uniform line charge from endpoint_a to endpoint_b (2D, meters)."""

    endpoint_a: tuple[float, float]
    endpoint_b: tuple[float, float]
    density: float  # C/m

    def __post_init__(self) -> None:
        a = (float(self.endpoint_a[0]), float(self.endpoint_a[1]))
        b = (float(self.endpoint_b[0]), float(self.endpoint_b[1]))
        if a == b:
            raise ValueError("segment endpoints must be distinct")
        if not math.isfinite(self.density):
            raise ValueError("charge density must be finite")
        object.__setattr__(self, "endpoint_a", a)
        object.__setattr__(self, "endpoint_b", b)

    @property
    def length(self) -> float:
        return math.hypot(
            self.endpoint_b[0] - self.endpoint_a[0], self.endpoint_b[1] - self.endpoint_a[1]
        )

    @property
    def direction(self) -> tuple[float, float]:
        """Unit vector from endpoint_a to endpoint_b."""
        length = self.length
        return (
            (self.endpoint_b[0] - self.endpoint_a[0]) / length,
            (self.endpoint_b[1] - self.endpoint_a[1]) / length,
        )


def _segment_frame(seg: LineChargeSegment, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates along (xp) and signed across (yp) the segment, from endpoint_a."""
    ux, uy = seg.direction
    rx = x - seg.endpoint_a[0]
    ry = y - seg.endpoint_a[1]
    return rx * ux + ry * uy, -rx * uy + ry * ux


def _segment_distance(seg: LineChargeSegment, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xp, yp = _segment_frame(seg, x, y)
    along = np.clip(xp, 0.0, seg.length)
    return np.hypot(xp - along, yp)


def _log_antiderivative(t: np.ndarray, yp: np.ndarray) -> np.ndarray:
    """F with F'(t) = ln sqrt(t^2 + yp^2); the atan term vanishes as yp -> 0
    and the t ln(t^2) term is finite for t -> 0, so F stays finite on the
    wire line away from the endpoints. atan(t/yp), not atan2: F must be
    continuous in t at t = 0 for either sign of yp."""
    r2 = t * t + yp * yp
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(r2 > 0.0, np.log(r2), 0.0)
        ratio = np.where(yp != 0.0, t / np.where(yp != 0.0, yp, 1.0), 0.0)
        atan_term = yp * np.arctan(ratio)
    return 0.5 * t * log_term - t + atan_term


def _segment_log_integral(seg: LineChargeSegment, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Integral of ln sqrt((x-s)^2 + y^2) ds along the segment."""
    xp, yp = _segment_frame(seg, x, y)
    return _log_antiderivative(xp, yp) - _log_antiderivative(xp - seg.length, yp)


def segment_projected_potential(
    seg: LineChargeSegment, point: Union[tuple[float, float], np.ndarray], rho0: float = 1.0
) -> Union[float, np.ndarray]:
    """Regularized z-integrated Coulomb potential of the segment, V*m.

    Evaluates -(density / 2 pi eps0) * integral ln(rho(s)/rho0) ds in
    closed form. The regularization length rho0 drops out of any neutral
    assembly of segments.

    Raises
    ------
    ValueError
        If any point lies within 1e-12 m of the segment, or rho0 <= 0.
    """
    if not rho0 > 0.0:
        raise ValueError("rho0 must be positive")
    pt = np.asarray(point, dtype=np.float64)
    x, y = pt[..., 0], pt[..., 1]
    if np.any(_segment_distance(seg, x, y) <= 1e-12):
        raise ValueError("potential evaluated on the charged segment")
    value = -(seg.density / (2.0 * np.pi * EPSILON0)) * (
        _segment_log_integral(seg, x, y) - seg.length * math.log(rho0)
    )
    if value.ndim == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class DeviceGeometry:
    """Two-wire electrostatic element: a +/- pair of parallel line charges.

    gap is the edge-to-edge opening between the physical wires and
    wire_width their physical width; both are metadata for the zero-width
    line-charge model (the width also sets the evaluation exclusion zone).
    Charge neutrality is required by the mask operations, which otherwise
    could not cancel the regularization length.
    """

    segment_pos: LineChargeSegment
    segment_neg: LineChargeSegment
    gap: float
    wire_width: float
    regularization_rho0: float = 1.0

    def __post_init__(self) -> None:
        if not self.gap > 0.0:
            raise ValueError("gap must be positive")
        if self.wire_width < 0.0:
            raise ValueError("wire width cannot be negative")
        if not self.regularization_rho0 > 0.0:
            raise ValueError("rho0 must be positive")
        dp = self.segment_pos.direction
        dn = self.segment_neg.direction
        cross = abs(dp[0] * dn[1] - dp[1] * dn[0])
        dot = abs(dp[0] * dn[0] + dp[1] * dn[1])
        if math.atan2(cross, dot) > 1e-9:
            raise ValueError("wire segments must be collinear in direction (within 1e-9 rad)")

    def total_charge(self) -> float:
        return (
            self.segment_pos.density * self.segment_pos.length
            + self.segment_neg.density * self.segment_neg.length
        )

    def tip_midpoint(self) -> tuple[float, float]:
        """Midpoint between the two wire tips (the endpoint_a pair)."""
        return (
            0.5 * (self.segment_pos.endpoint_a[0] + self.segment_neg.endpoint_a[0]),
            0.5 * (self.segment_pos.endpoint_a[1] + self.segment_neg.endpoint_a[1]),
        )

    def axis_direction(self) -> tuple[float, float]:
        """Unit vector from the tips toward the wire bodies."""
        dp = self.segment_pos.direction
        dn = self.segment_neg.direction
        sx, sy = dp[0] + dn[0], dp[1] + dn[1]
        norm = math.hypot(sx, sy)
        if norm == 0.0:
            raise ValueError("wire directions cancel; tips are not aligned")
        return (sx / norm, sy / norm)

    def separation(self) -> float:
        """Perpendicular distance between the two wire centerlines."""
        ux, uy = self.segment_pos.direction
        rx = self.segment_neg.endpoint_a[0] - self.segment_pos.endpoint_a[0]
        ry = self.segment_neg.endpoint_a[1] - self.segment_pos.endpoint_a[1]
        return abs(-rx * uy + ry * ux)

    def _check_neutral(self) -> None:
        scale = abs(self.segment_pos.density) * self.segment_pos.length + abs(
            self.segment_neg.density
        ) * self.segment_neg.length
        if abs(self.total_charge()) > 1e-12 * max(scale, 1e-300):
            raise ValueError(
                "device is not charge neutral; the mask would depend on the "
                "regularization length"
            )


def two_wire_device(
    gap: float,
    wire_width: float,
    length: float,
    density: float,
    rho0: float = 1.0,
) -> DeviceGeometry:
    """Standard device: two parallel wires along +x with aligned tips at
    x = 0, centerlines at y = +/- (gap + wire_width)/2, and densities
    +/- `density` (positive wire on top).

    The tip midpoint lands at the origin; beams are aimed there.
    """
    if not length > 0.0:
        raise ValueError("wire length must be positive")
    half = 0.5 * (gap + wire_width)
    pos = LineChargeSegment((0.0, half), (length, half), density)
    neg = LineChargeSegment((0.0, -half), (length, -half), -density)
    return DeviceGeometry(pos, neg, gap=gap, wire_width=wire_width, regularization_rho0=rho0)


def device_exclusion_zone(dev: DeviceGeometry, grid: Grid2D) -> np.ndarray:
    """Boolean map that is False inside the device strip: every point
    within gap/2 + wire_width of the axis ray covering both wires.

    The strip is where the mask phase is not usable as data. The wires
    themselves are opaque, and the slot between them carries the steep
    potential walls that return the accumulated azimuthal phase: the two
    transverse kink walls of slope sigma*lambda/(2*eps0) drop by exactly
    2*pi*ell_eff between the strip edges. Cutting the whole strip out
    punctures the plane along the device, exposing the branch of the
    azimuthal phase whose winding around the tips is the device's charge.
    Outside the strip the phase is azimuthal already, so nothing physical
    is lost.
    """
    tm = dev.tip_midpoint()
    ax, ay = dev.axis_direction()
    reach = 0.0
    for seg in (dev.segment_pos, dev.segment_neg):
        for end in (seg.endpoint_a, seg.endpoint_b):
            reach = max(reach, (end[0] - tm[0]) * ax + (end[1] - tm[1]) * ay)
    axis_segment = LineChargeSegment(tm, (tm[0] + ax * reach, tm[1] + ay * reach), 0.0)
    half_width = 0.5 * dev.gap + dev.wire_width
    x, y = grid.mesh()
    x = np.broadcast_to(x, grid.shape)
    y = np.broadcast_to(y, grid.shape)
    return _segment_distance(axis_segment, x, y) > half_width


def device_phase_mask(dev: DeviceGeometry, beam: BeamParameters, grid: Grid2D) -> ScalarField2D:
    """Phase -sigma * (V_pos + V_neg) imprinted by the device, unwrapped.

    The continuous, single-valued projected potential keeps the result
    unwrapped here; serialization wraps for display. Neutrality makes the
    value independent of the regularization length to fp roundoff.

    Pixels inside the device strip (see device_exclusion_zone) are flagged
    invalid and carry value zero; winding readouts bridge across the strip
    and see the azimuthal branch directly.

    Raises
    ------
    ValueError
        If the device is not neutral, or a pixel kept outside the
        exclusion zone lies exactly on a wire centerline.
    """
    dev._check_neutral()
    x, y = grid.mesh()
    x = np.broadcast_to(x, grid.shape)
    y = np.broadcast_to(y, grid.shape)
    rho0 = dev.regularization_rho0
    keep = device_exclusion_zone(dev, grid)
    total = np.zeros(grid.shape)
    for seg in (dev.segment_pos, dev.segment_neg):
        dist = _segment_distance(seg, x, y)
        on_wire = dist <= 1e-12
        # On-centerline pixels are singular for evaluation. With a real wire
        # width they sit half a width inside the exclusion strip and are
        # simply flagged; at zero width they coincide with the strip
        # boundary, where roundoff decides `keep`, so reject outright.
        if np.any(on_wire) and (dev.wire_width <= 2e-12 or bool(np.any(on_wire & keep))):
            raise ValueError(f"{int(np.sum(on_wire))} grid pixels lie on a wire centerline")
        # endpoint pixels of an excluded wire hit the t*log(t) limit of the
        # antiderivative; their values are discarded below
        with np.errstate(invalid="ignore", divide="ignore"):
            total += -(seg.density / (2.0 * np.pi * EPSILON0)) * (
                _segment_log_integral(seg, x, y) - seg.length * math.log(rho0)
            )
    values = -beam.interaction_constant * total
    if bool(np.all(keep)):
        return ScalarField2D(grid, values)
    return ScalarField2D(grid, np.where(keep, values, 0.0), keep)


def device_shadow(dev: DeviceGeometry, grid: Grid2D) -> np.ndarray:
    """Boolean transmission map of the device: False where the beam is
    blocked by a wire, i.e. within half the wire width of a centerline.

    Zero-width wires cast no shadow.
    """
    if dev.wire_width == 0.0:
        return np.ones(grid.shape, dtype=bool)
    x, y = grid.mesh()
    x = np.broadcast_to(x, grid.shape)
    y = np.broadcast_to(y, grid.shape)
    keep = np.ones(grid.shape, dtype=bool)
    for seg in (dev.segment_pos, dev.segment_neg):
        keep &= _segment_distance(seg, x, y) > 0.5 * dev.wire_width
    return keep


def effective_topological_charge(
    dev: DeviceGeometry,
    beam: BeamParameters,
    loop_radius: float,
    samples: int = 720,
    harmonics: int = 8,
) -> float:
    """Secular winding rate of the device phase around the tip midpoint.

    Samples the continuous phase on the back arc of a circle about the
    tip midpoint, spanning 2/3 of a turn on the side facing away from the
    wires. The single-valued potential runs its 2 pi ell back through the
    slot between the wires, and the wires themselves pierce any circle
    wider than half their separation, so only the back arc is both
    singularity-free and representative of the asymptotic vortex. A
    least-squares fit of a + ell*phi plus `harmonics` Fourier terms there
    absorbs the multipole corrections of the finite wire separation;
    ell estimates the asymptotic charge and is exactly linear in the
    charge density.

    Raises
    ------
    ValueError
        If loop_radius is not in (0, 5*gap), arc samples come closer than
        half a wire width to a centerline, or the device is not neutral.
    """
    dev._check_neutral()
    if not 0.0 < loop_radius < 5.0 * dev.gap:
        raise ValueError(f"loop radius must lie in (0, {5.0 * dev.gap:g}) m, got {loop_radius:g}")
    if samples < 64:
        raise ValueError("need at least 64 loop samples")
    if harmonics < 1:
        raise ValueError("need at least one harmonic")
    cx, cy = dev.tip_midpoint()
    ax, ay = dev.axis_direction()
    # Arc angle measured from the direction opposite the wires.
    half_width = 2.0 * np.pi / 3.0
    arc = half_width * (2.0 * (np.arange(samples) + 0.5) / samples - 1.0)
    x = cx - loop_radius * (ax * np.cos(arc) - ay * np.sin(arc))
    y = cy - loop_radius * (ax * np.sin(arc) + ay * np.cos(arc))
    for seg in (dev.segment_pos, dev.segment_neg):
        clearance = max(0.5 * dev.wire_width, 1e-12)
        if np.any(_segment_distance(seg, x, y) <= clearance):
            raise ValueError("loop samples intersect a wire")
    rho0 = dev.regularization_rho0
    v = np.zeros(arc.shape)
    for seg in (dev.segment_pos, dev.segment_neg):
        v += -(seg.density / (2.0 * np.pi * EPSILON0)) * (
            _segment_log_integral(seg, x, y) - seg.length * math.log(rho0)
        )
    theta = -beam.interaction_constant * v
    cols = [np.ones_like(arc), arc]
    for k in range(1, harmonics + 1):
        cols.append(np.sin(k * arc))
        cols.append(np.cos(k * arc))
    design = np.stack(cols, axis=1)
    coeff, *_ = np.linalg.lstsq(design, theta, rcond=None)
    return float(coeff[1])
