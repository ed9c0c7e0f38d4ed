"""Airfoil coordinate parsing, repanelization and geometric metrics.

A canonical profile has 200 points: 100 on the upper surface with x running
from the trailing edge (1) to the leading edge (0), then 100 on the lower
surface from the leading edge back to the trailing edge. Both surfaces share
one cosine-spaced x-grid, so a profile reduces to a 2x100 array of y-values.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

N_SURFACE = 100
N_POINTS = 2 * N_SURFACE
DUPLICATE_TOL = 1e-9
LEADING_EDGE_TOL = 1e-6


class GeometryError(ValueError):
    """Base class for rejected airfoil geometry."""


class EmptyInput(GeometryError):
    pass


class MalformedLine(GeometryError):
    pass


class TooFewPoints(GeometryError):
    pass


class DegenerateProfile(GeometryError):
    pass


class NoLeadingEdge(GeometryError):
    pass


class ZeroChord(GeometryError):
    pass


class YOutOfRange(GeometryError):
    pass


class WrongPointCount(GeometryError):
    pass


class NegativeThicknessWarning(UserWarning):
    """Upper and lower surfaces cross somewhere along the chord."""


def surface_grid(n: int = N_SURFACE) -> np.ndarray:
    """Cosine-spaced x stations on [0, 1], clustered at both edges."""
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))


SURFACE_X = surface_grid()
SURFACE_X.setflags(write=False)
CANONICAL_X = np.concatenate([SURFACE_X[::-1], SURFACE_X])
CANONICAL_X.setflags(write=False)


@dataclass(frozen=True)
class AirfoilProfile:
    """Ordered (x, y) points, upper surface TE->LE then lower LE->TE."""

    name: str
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise GeometryError(f"points must have shape (n, 2), got {pts.shape}")
        if len(pts) < 4:
            raise TooFewPoints(f"{self.name!r}: need at least 4 points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError(f"{self.name!r}: non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self) -> int:
        return len(self.points)

    def is_canonical(self) -> bool:
        return len(self.points) == N_POINTS and np.array_equal(self.x, CANONICAL_X)


@dataclass(frozen=True)
class CanonicalSample:
    """The 2x100 y-channel array the denoiser consumes.

    Channel 0 is the upper surface at x = 1 -> 0, channel 1 the lower surface
    at x = 0 -> 1.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (2, N_SURFACE):
            raise WrongPointCount(f"canonical sample must be 2x{N_SURFACE}, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def upper(self) -> np.ndarray:
        return self.values[0]

    @property
    def lower(self) -> np.ndarray:
        return self.values[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class GeometricMetrics:
    chord: float
    max_thickness: float
    thickness_ratio: float
    max_camber: float
    camber_line: np.ndarray = field(repr=False)
    negative_thickness: bool = False


# ---------------------------------------------------------------------------
# Selig / Lednicer coordinate files
# ---------------------------------------------------------------------------


def _parse_pair(line: str, lineno: int) -> tuple[float, float]:
    tokens = line.split()
    if len(tokens) != 2:
        raise MalformedLine(f"line {lineno}: expected 2 numbers, got {len(tokens)} tokens: {line!r}")
    try:
        return float(tokens[0]), float(tokens[1])
    except ValueError:
        raise MalformedLine(f"line {lineno}: non-numeric token in {line!r}") from None


def parse_selig(text: str) -> AirfoilProfile:
    """Parse a coordinate file: a name line, then one ``x y`` pair per line.

    Files in Lednicer layout (a point-count line, then the upper and lower
    surfaces each running LE->TE) are reordered into Selig order.
    """
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise EmptyInput("no content")
    name = lines[0][1]
    pairs = [_parse_pair(ln, i) for i, ln in lines[1:]]
    if pairs and pairs[0][0] > 1.5 and pairs[0][1] > 1.5:
        pairs = _lednicer_to_selig(pairs)
    if len(pairs) < 4:
        raise TooFewPoints(f"{name!r}: need at least 4 points, got {len(pairs)}")
    return AirfoilProfile(name, np.array(pairs, dtype=float))


def _lednicer_to_selig(pairs):
    n_up, n_lo = int(round(pairs[0][0])), int(round(pairs[0][1]))
    body = pairs[1:]
    if n_up + n_lo != len(body) or n_up < 2 or n_lo < 2:
        raise MalformedLine(
            f"point-count header ({n_up}, {n_lo}) does not match {len(body)} coordinate lines"
        )
    upper, lower = body[:n_up], body[n_up:]
    if upper[0] == lower[0]:
        lower = lower[1:]
    return upper[::-1] + lower


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def to_selig(profile: AirfoilProfile) -> str:
    rows = [profile.name] + [f"{_fmt(x)} {_fmt(y)}" for x, y in profile.points]
    return "\n".join(rows) + "\n"


def read_profile(path) -> AirfoilProfile:
    with open(path, encoding="utf-8", errors="replace") as fh:
        return parse_selig(fh.read())


def write_profile(path, profile: AirfoilProfile) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_selig(profile))


# ---------------------------------------------------------------------------
# Normalization and repanelization
# ---------------------------------------------------------------------------


def normalize(profile: AirfoilProfile) -> AirfoilProfile:
    """Map x onto [0, 1] and scale y by the same factor.

    The y offset is left alone; only the scale is shared with x, so thickness
    ratio and camber survive the transform.
    """
    x, y = profile.x, profile.y
    x0, x1 = float(x.min()), float(x.max())
    chord = x1 - x0
    if not chord > 0.0:
        raise ZeroChord(f"{profile.name!r}: zero chordwise extent")
    if np.any(np.abs(y) / chord > 1.0):
        raise YOutOfRange(f"{profile.name!r}: |y| exceeds one chord after scaling")
    if x0 == 0.0 and chord == 1.0:
        return profile
    xn = (x - x0) / chord
    yn = y / chord
    return AirfoilProfile(profile.name, np.column_stack([xn, yn]))


def _collapse_duplicates(pts: np.ndarray, tol: float = DUPLICATE_TOL) -> np.ndarray:
    step = np.abs(np.diff(pts, axis=0))
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = ~np.all(step <= tol, axis=1)
    return pts[keep]


def leading_edge_index(pts: np.ndarray) -> int:
    """Index of the minimum-x point; ties go to the smallest |y|."""
    x = pts[:, 0]
    candidates = np.flatnonzero(x == x.min())
    return int(candidates[np.argmin(np.abs(pts[candidates, 1]))])


def _invert_x(xs, ys, knots, s_lo, s_hi, s_le, x_targets) -> np.ndarray:
    """y on the contour stretch s in [s_lo, s_hi] at each target x.

    Targets that coincide with a knot return that knot's y; otherwise x(s) is
    solved and the root nearest the leading edge wins.
    """
    in_span = (knots[:, 2] >= s_lo) & (knots[:, 2] <= s_hi)
    span = knots[in_span]
    x_lo, x_hi = xs(s_lo), xs(s_hi)
    out = np.empty(len(x_targets))
    for i, xt in enumerate(x_targets):
        exact = np.flatnonzero(span[:, 0] == xt)
        if len(exact):
            out[i] = span[exact[np.argmin(np.abs(span[exact, 2] - s_le))], 1]
            continue
        roots = xs.solve(xt, extrapolate=False)
        roots = roots[(roots >= s_lo) & (roots <= s_hi)]
        if len(roots) == 0:
            # target beyond this stretch (open or hooked trailing edge): clamp to the nearer end
            out[i] = ys(s_lo if abs(x_lo - xt) < abs(x_hi - xt) else s_hi)
            continue
        out[i] = ys(roots[np.argmin(np.abs(roots - s_le))])
    return out


def repanelize(profile: AirfoilProfile, n_per_surface: int = N_SURFACE) -> AirfoilProfile:
    """Resample a normalized profile onto the shared cosine x-grid.

    The whole contour is splined in cumulative arc length (natural ends at the
    trailing edge), so blunt noses where y is not a function of x stay smooth.
    The contour is split at the minimum-x point and each half is sampled at
    the grid by solving x(s) = x_k. Returns ``2 * n_per_surface`` points; the
    leading-edge station appears at the end of the upper half and again at
    the start of the lower half.
    """
    if n_per_surface < 4:
        raise ValueError("n_per_surface must be at least 4")
    pts = _collapse_duplicates(profile.points)
    if len(pts) < 4:
        raise DegenerateProfile(f"{profile.name!r}: fewer than 4 distinct points")
    if pts[:, 0].min() > LEADING_EDGE_TOL:
        raise NoLeadingEdge(f"{profile.name!r}: x does not reach 0; normalize first")
    le = leading_edge_index(pts)
    if le < 2 or len(pts) - 1 - le < 2:
        raise DegenerateProfile(f"{profile.name!r}: a surface has fewer than 3 points")
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if not (s[le] > 0.0 and s[-1] > s[le]):
        raise DegenerateProfile(f"{profile.name!r}: zero arc length on a surface")
    xs = CubicSpline(s, pts[:, 0], bc_type="natural")
    ys = CubicSpline(s, pts[:, 1], bc_type="natural")
    knots = np.column_stack([pts, s])
    grid = SURFACE_X if n_per_surface == N_SURFACE else surface_grid(n_per_surface)
    yu = _invert_x(xs, ys, knots, 0.0, s[le], s[le], grid)
    yl = _invert_x(xs, ys, knots, s[le], s[-1], s[le], grid)
    x = np.concatenate([grid[::-1], grid])
    y = np.concatenate([yu[::-1], yl])
    return AirfoilProfile(profile.name, np.column_stack([x, y]))


def canonicalize(profile: AirfoilProfile) -> AirfoilProfile:
    """normalize then repanelize."""
    return repanelize(normalize(profile))


def as_canonical(profile: AirfoilProfile, x_tol: float = 1e-5) -> AirfoilProfile:
    """Snap a profile already on the canonical grid (up to file rounding) onto
    it exactly; anything else goes through :func:`canonicalize`."""
    if len(profile) == N_POINTS and float(np.abs(profile.x - CANONICAL_X).max()) <= x_tol:
        return AirfoilProfile(profile.name, np.column_stack([CANONICAL_X, profile.y]))
    return canonicalize(profile)


def to_canonical(profile: AirfoilProfile) -> CanonicalSample:
    if len(profile) != N_POINTS:
        raise WrongPointCount(f"{profile.name!r}: expected {N_POINTS} points, got {len(profile)}")
    y = profile.y
    return CanonicalSample(np.stack([y[:N_SURFACE], y[N_SURFACE:]]))


def from_canonical(sample, name: str = "generated") -> AirfoilProfile:
    values = np.asarray(sample, dtype=float)
    if values.shape != (2, N_SURFACE):
        raise WrongPointCount(f"canonical sample must be 2x{N_SURFACE}, got {values.shape}")
    return AirfoilProfile(name, np.column_stack([CANONICAL_X, values.reshape(-1)]))


def mirror(profile: AirfoilProfile) -> AirfoilProfile:
    """Reflect about y = 0, reversing point order so the upper surface stays first."""
    pts = profile.points[::-1] * np.array([1.0, -1.0])
    return AirfoilProfile(profile.name, pts)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def surfaces_on_grid(profile: AirfoilProfile) -> tuple[np.ndarray, np.ndarray]:
    """(upper y, lower y), both ordered along the increasing grid."""
    if len(profile) != N_POINTS:
        raise WrongPointCount(f"{profile.name!r}: expected {N_POINTS} points, got {len(profile)}")
    y = profile.y
    return y[:N_SURFACE][::-1], y[N_SURFACE:]


def geometric_metrics(profile: AirfoilProfile) -> GeometricMetrics:
    """Chord, thickness and camber of a canonical profile.

    Crossing surfaces are flagged with ``negative_thickness`` and a
    ``NegativeThicknessWarning``; max_thickness is floored at zero.
    """
    yu, yl = surfaces_on_grid(profile)
    chord = float(profile.x.max() - profile.x.min())
    thick = yu - yl
    camber = (yu + yl) / 2.0
    crossed = bool(np.any(thick < -DUPLICATE_TOL))
    if crossed:
        warnings.warn(f"{profile.name!r}: surfaces cross", NegativeThicknessWarning, stacklevel=2)
    t = max(float(thick.max()), 0.0)
    return GeometricMetrics(
        chord=chord,
        max_thickness=t,
        thickness_ratio=t / chord,
        max_camber=float(np.abs(camber).max()),
        camber_line=np.column_stack([SURFACE_X, camber]),
        negative_thickness=crossed,
    )
