"""Closed-form NACA 4-digit sections.

Used to build license-free fixture profiles and as an analytic reference
for the repanelization and metric tests.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import AirfoilProfile

# Closed trailing edge variant of the last thickness coefficient.
_THICKNESS_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843, -0.1036)


def parse_code(code: str) -> tuple[float, float, float]:
    """Return (max camber, camber position, thickness) as chord fractions."""
    code = code.strip().upper().removeprefix("NACA").strip()
    if len(code) != 4 or not code.isdigit():
        raise ValueError(f"not a NACA 4-digit code: {code!r}")
    return int(code[0]) / 100.0, int(code[1]) / 10.0, int(code[2:]) / 100.0


def thickness(x, t: float):
    """Half-thickness distribution y_t(x) for thickness ratio ``t``."""
    x = np.asarray(x, dtype=float)
    a0, a1, a2, a3, a4 = _THICKNESS_COEFFS
    return 5.0 * t * (a0 * np.sqrt(x) + a1 * x + a2 * x**2 + a3 * x**3 + a4 * x**4)


def camber(x, m: float, p: float):
    """Mean-line ordinate and slope ``(y_c, dy_c/dx)``."""
    x = np.asarray(x, dtype=float)
    if m == 0.0 or p == 0.0:
        return np.zeros_like(x), np.zeros_like(x)
    front = x < p
    yc = np.where(
        front,
        m / p**2 * (2 * p * x - x**2),
        m / (1 - p) ** 2 * ((1 - 2 * p) + 2 * p * x - x**2),
    )
    dyc = np.where(front, 2 * m / p**2 * (p - x), 2 * m / (1 - p) ** 2 * (p - x))
    return yc, dyc


def surfaces(xc, code: str):
    """Upper and lower surface coordinates at mean-line stations ``xc``.

    Returns ``(xu, yu, xl, yl)``; thickness is applied normal to the mean line.
    """
    m, p, t = parse_code(code)
    xc = np.asarray(xc, dtype=float)
    yt = thickness(xc, t)
    yc, dyc = camber(xc, m, p)
    theta = np.arctan(dyc)
    xu = xc - yt * np.sin(theta)
    yu = yc + yt * np.cos(theta)
    xl = xc + yt * np.sin(theta)
    yl = yc - yt * np.cos(theta)
    return xu, yu, xl, yl


def cosine_stations(n: int) -> np.ndarray:
    beta = np.linspace(0.0, np.pi, n)
    return 0.5 * (1.0 - np.cos(beta))


def naca4(code: str, n_per_side: int = 66, stations=None) -> AirfoilProfile:
    """Selig-ordered profile for a 4-digit section.

    ``stations`` overrides the cosine-spaced mean-line stations; it must start
    at 0 and end at 1. The leading-edge point is shared, so the profile has
    ``2 * len(stations) - 1`` points.
    """
    xc = cosine_stations(n_per_side) if stations is None else np.asarray(stations, float)
    xu, yu, xl, yl = surfaces(xc, code)
    x = np.concatenate([xu[::-1], xl[1:]])
    y = np.concatenate([yu[::-1], yl[1:]])
    digits = code.strip().upper().removeprefix("NACA").strip()
    return AirfoilProfile(f"NACA {digits}", np.column_stack([x, y]))


def _contour(u, code: str):
    """Points on the closed contour: u in [-1, 0] is the upper surface at
    xc = -u, u in [0, 1] the lower surface at xc = u."""
    u = np.asarray(u, dtype=float)
    xu, yu, xl, yl = surfaces(np.abs(u), code)
    up = u < 0
    return np.where(up, xu, xl), np.where(up, yu, yl)


def nose_parameter(code: str) -> float:
    """Contour parameter (see :func:`_contour`) of the most forward point."""
    st = cosine_stations(20001)
    u = np.concatenate([-st[::-1], st[1:]])
    xd, _ = _contour(u, code)
    le = int(np.argmin(xd))
    return float(
        minimize_scalar(
            lambda v: float(_contour(v, code)[0]),
            bounds=(u[max(le - 1, 0)], u[min(le + 1, len(u) - 1)]),
            method="bounded",
            options={"xatol": 1e-14},
        ).x
    )


def stations_with_nose(code: str, n: int = 66) -> np.ndarray:
    """Cosine stations plus the chordwise station of the true nose, so the
    sampled profile's most forward point is the contour's."""
    return np.unique(np.concatenate([cosine_stations(n), [abs(nose_parameter(code))]]))


def surface_y_at(x_target, code: str, upper: bool) -> np.ndarray:
    """Analytic surface ordinate at chordwise positions ``x_target``.

    The closed contour is split at its most forward point, matching how
    discrete profiles are split, and each half is inverted for x by root
    finding on the contour parameter.
    """
    x_target = np.atleast_1d(np.asarray(x_target, dtype=float))
    st = cosine_stations(20001)
    u = np.concatenate([-st[::-1], st[1:]])
    nose = nose_parameter(code)
    branch_u = np.concatenate([[nose], u[u < nose][::-1] if upper else u[u > nose]])
    branch_x, _ = _contour(branch_u, code)
    out = np.empty_like(x_target)
    for i, xt in enumerate(x_target):
        if xt <= branch_x[0]:
            out[i] = _contour(nose, code)[1]
            continue
        if xt >= branch_x[-1]:
            out[i] = _contour(branch_u[-1], code)[1]
            continue
        k = int(np.searchsorted(branch_x, xt))
        f = lambda v: float(_contour(v, code)[0]) - xt  # noqa: E731
        v = brentq(f, branch_u[k - 1], branch_u[k], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        out[i] = _contour(v, code)[1]
    return out
