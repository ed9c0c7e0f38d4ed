"""Potential-flow aerodynamic coefficients for canonical profiles.

Lift comes from a linear-strength vortex panel method in streamfunction form
(constant psi at every node, Kutta condition gamma_TE,lower + gamma_TE,upper
= 0, trailing-edge gap closed by a source/vortex panel). Drag is an estimate:
turbulent flat-plate skin friction over the wetted length times a thickness
form factor. Nothing here attempts stall, transition or compressibility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .geometry import AirfoilProfile, GeometryError, N_SURFACE, surfaces_on_grid

ALPHA_LIMIT = math.pi / 6
# below this maximum thickness the two surfaces coincide and the closed-body
# formulation is singular; the section is solved as a vortex sheet on its mean line
THIN_SECTION_TOL = 1e-6
MAX_CONDITION = 1e12
# trailing-edge gaps below this (chord fraction) are treated as closed
TE_GAP_TOL = 1e-10


class AeroError(ValueError):
    pass


class EnvelopeExceeded(AeroError):
    pass


class SingularSystem(AeroError):
    pass


@dataclass(frozen=True)
class FlowCondition:
    alpha: float = 0.0
    reynolds: float = 1e6

    def __post_init__(self):
        if not abs(self.alpha) < ALPHA_LIMIT:
            raise EnvelopeExceeded(f"|alpha| = {abs(self.alpha):.4f} rad outside the oracle envelope")
        if not self.reynolds > 0:
            raise EnvelopeExceeded(f"reynolds must be positive, got {self.reynolds}")

    @classmethod
    def from_degrees(cls, alpha_deg: float = 0.0, reynolds: float = 1e6) -> "FlowCondition":
        return cls(math.radians(alpha_deg), reynolds)


@dataclass(frozen=True)
class AeroCoefficients:
    cl: float
    cd: float

    @property
    def lift_to_drag(self) -> float:
        return self.cl / self.cd


@dataclass(frozen=True)
class AeroFailure:
    """Per-item error record from :func:`evaluate_batch`."""

    index: int
    error: str
    message: str


# ---------------------------------------------------------------------------
# panel method
# ---------------------------------------------------------------------------


def _contour_nodes(profile: AirfoilProfile) -> np.ndarray:
    """Clockwise node list (lower TE -> LE -> upper TE) with the shared LE merged."""
    pts = profile.points
    if len(pts) == 2 * N_SURFACE and np.array_equal(pts[N_SURFACE - 1], pts[N_SURFACE]):
        pts = np.concatenate([pts[:N_SURFACE], pts[N_SURFACE + 1 :]])
    nodes = pts[::-1]
    # shoelace area is negative for clockwise traversal
    x, z = nodes[:, 0], nodes[:, 1]
    area2 = np.dot(x, np.roll(z, -1)) - np.dot(np.roll(x, -1), z)
    if area2 > 0:
        nodes = nodes[::-1]
    return np.ascontiguousarray(nodes)


def _panel_frame(p1, p2, pts):
    tx, tz = p2 - p1
    d = math.hypot(tx, tz)
    tx, tz = tx / d, tz / d
    rx = pts[:, 0] - p1[0]
    rz = pts[:, 1] - p1[1]
    x = rx * tx + rz * tz
    z = -rx * tz + rz * tx
    return d, x, z


def _const_source_stream(p1, p2, pts) -> np.ndarray:
    """Streamfunction at ``pts`` of a unit constant-strength source panel."""
    d, x, z = _panel_frame(p1, p2, pts)
    r1 = np.hypot(x, z)
    r2 = np.hypot(x - d, z)
    th1 = np.arctan2(z, x)
    th2 = np.arctan2(z, x - d)
    on1 = r1 < 1e-9
    on2 = r2 < 1e-9
    with np.errstate(divide="ignore"):
        lr1 = np.where(on1, 0.0, np.log(r1))
        lr2 = np.where(on2, 0.0, np.log(r2))
    th1 = np.where(on1, math.pi, np.where(on2, 0.0, th1))
    th2 = np.where(on1, math.pi, np.where(on2, 0.0, th2))
    psi = (x * (th1 - th2) + d * th2 + z * lr1 - z * lr2) / (2 * math.pi)
    # branch-cut offset keeps psi single valued behind the panel
    return np.where(th1 + th2 > math.pi, psi - 0.25 * d, psi + 0.75 * d)


def _linear_vortex_stream(p1, p2, pts) -> np.ndarray:
    """Streamfunction at ``pts`` of a unit-strength (gamma1 = gamma2 = 1) linear vortex panel."""
    d, x, z = _panel_frame(p1, p2, pts)
    r1 = np.hypot(x, z)
    r2 = np.hypot(x - d, z)
    th1 = np.arctan2(z, x)
    th2 = np.arctan2(z, x - d)
    with np.errstate(divide="ignore"):
        lr1 = np.where(r1 < 1e-9, 0.0, np.log(r1))
        lr2 = np.where(r2 < 1e-9, 0.0, np.log(r2))
    return (0.5 / math.pi) * (z * (th2 - th1) - d + x * lr1 - (x - d) * lr2)


def _te_geometry(nodes):
    """Trailing-edge gap normal to the bisector, and |t x p|, t . p for the gap panel."""
    t1 = nodes[0] - nodes[1]
    t1 = t1 / np.hypot(*t1)
    t2 = nodes[-1] - nodes[-2]
    t2 = t2 / np.hypot(*t2)
    bis = 0.5 * (t1 + t2)
    bis = bis / np.hypot(*bis)
    s = nodes[-1] - nodes[0]
    gap = -s[0] * bis[1] + s[1] * bis[0]
    ds = np.hypot(*s)
    if ds == 0.0:
        return gap, 0.0, 0.0
    p = s / ds
    return gap, abs(bis[0] * p[1] - bis[1] * p[0]), float(np.dot(bis, p))


def _influence_system(nodes: np.ndarray) -> tuple[np.ndarray, bool]:
    """Streamfunction system for node gammas plus the surface psi; also returns
    whether the trailing edge is sharp (last node row replaced)."""
    n = len(nodes)
    a = np.zeros((n + 1, n + 1))
    a[:n, :n] = kernels.vortex_stream_influence(nodes)
    a[:n, n] = -1.0
    gap, tcp, tdp = _te_geometry(nodes)
    chord = nodes[:, 0].max() - nodes[:, 0].min()
    if np.hypot(*(nodes[-1] - nodes[0])) > TE_GAP_TOL * chord:
        src = _const_source_stream(nodes[-1], nodes[0], nodes)
        vort = _linear_vortex_stream(nodes[-1], nodes[0], nodes)
        a[:n, 0] += -src * 0.5 * tcp + vort * 0.5 * tdp
        a[:n, n - 1] += src * 0.5 * tcp - vort * 0.5 * tdp
    sharp = abs(gap) < TE_GAP_TOL * chord
    if sharp:
        # coincident TE nodes give identical rows; extrapolate gamma instead
        a[n - 1, :] = 0.0
        a[n - 1, [0, 1, 2, n - 3, n - 2, n - 1]] = [1, -2, 1, -1, 2, -1]
    a[n, 0] = 1.0
    a[n, n - 1] = 1.0
    return a, sharp


def _panel_cl(nodes, profile_name, alpha) -> float:
    n = len(nodes)
    a, sharp = _influence_system(nodes)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularSystem(f"{profile_name!r}: panel system is singular (cond={cond:.3g})")
    rhs = np.zeros((n + 1, 2))
    rhs[:n, 0] = -nodes[:, 1]
    rhs[:n, 1] = nodes[:, 0]
    if sharp:
        rhs[n - 1] = 0.0
    g = np.linalg.solve(a, rhs)[:n]
    gamma = g[:, 0] * math.cos(alpha) + g[:, 1] * math.sin(alpha)
    cp = 1.0 - gamma * gamma
    nxt = np.roll(np.arange(n), -1)
    dxv = nodes[nxt] - nodes
    cp_avg = 0.5 * (cp + cp[nxt])
    # clockwise ordering: lower surface runs forward, so -dx picks up +cp_lower
    dx = -dxv[:, 0] * math.cos(alpha) - dxv[:, 1] * math.sin(alpha)
    chord = nodes[:, 0].max() - nodes[:, 0].min()
    return float(np.dot(dx, cp_avg) / chord)


def _thin_section_cl(mean_x, mean_z, alpha) -> float:
    """Lumped-vortex solution on the mean line (vortex at 1/4, collocation at 3/4 panel)."""
    p1 = np.column_stack([mean_x[:-1], mean_z[:-1]])
    p2 = np.column_stack([mean_x[1:], mean_z[1:]])
    vort = p1 + 0.25 * (p2 - p1)
    coll = p1 + 0.75 * (p2 - p1)
    t = p2 - p1
    t = t / np.hypot(t[:, 0], t[:, 1])[:, None]
    normal = np.column_stack([-t[:, 1], t[:, 0]])
    dx = coll[:, None, 0] - vort[None, :, 0]
    dz = coll[:, None, 1] - vort[None, :, 1]
    r2 = dx * dx + dz * dz
    # clockwise-positive point vortex
    u = dz / (2 * math.pi * r2)
    w = -dx / (2 * math.pi * r2)
    a = u * normal[:, None, 0] + w * normal[:, None, 1]
    rhs = -(math.cos(alpha) * normal[:, 0] + math.sin(alpha) * normal[:, 1])
    circulation = np.linalg.solve(a, rhs)
    chord = mean_x.max() - mean_x.min()
    return float(2.0 * circulation.sum() / chord)


# ---------------------------------------------------------------------------
# drag estimate
# ---------------------------------------------------------------------------


def skin_friction(reynolds: float) -> float:
    """Turbulent flat-plate skin-friction coefficient (Schlichting)."""
    return 0.455 / math.log10(reynolds) ** 2.58


def drag_estimate(profile: AirfoilProfile, reynolds: float) -> float:
    yu, yl = surfaces_on_grid(profile)
    chord = float(profile.x.max() - profile.x.min())
    pts = profile.points
    wetted = float(np.hypot(*np.diff(pts, axis=0).T).sum()) / chord
    t_over_c = max(float((yu - yl).max()), 0.0) / chord
    return skin_friction(reynolds) * wetted * (1.0 + 2.0 * t_over_c)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def lift_coefficient(profile: AirfoilProfile, alpha: float) -> float:
    yu, yl = surfaces_on_grid(profile)
    if float(np.abs(yu - yl).max()) < THIN_SECTION_TOL:
        from .geometry import SURFACE_X

        return _thin_section_cl(SURFACE_X, 0.5 * (yu + yl), alpha)
    return _panel_cl(_contour_nodes(profile), profile.name, alpha)


def evaluate(profile: AirfoilProfile, flow: FlowCondition = FlowCondition()) -> AeroCoefficients:
    """C_l and C_d of a canonical 200-point profile."""
    cl = lift_coefficient(profile, flow.alpha)
    cd = drag_estimate(profile, flow.reynolds)
    if not (math.isfinite(cl) and math.isfinite(cd)):
        raise SingularSystem(f"{profile.name!r}: non-finite coefficients")
    return AeroCoefficients(cl, cd)


def evaluate_batch(
    profiles: Sequence[AirfoilProfile], flow: FlowCondition = FlowCondition()
) -> list:
    """Evaluate each profile; failures become :class:`AeroFailure` entries in place."""
    results = []
    for i, prof in enumerate(profiles):
        try:
            results.append(evaluate(prof, flow))
        except (AeroError, GeometryError, np.linalg.LinAlgError) as exc:
            results.append(AeroFailure(i, type(exc).__name__, str(exc)))
    return results
