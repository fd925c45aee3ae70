"""Rotationally symmetric translators (bowls) and self-expanders.

Both are graphs u(r) solving

    u'' / (1 + u'^2) + (n - 1) u' / r = F(r, u, u')

with F = N for a translator moving with velocity N e_{n+1} and
F = c (u - r u') for an expander H = c <X, nu>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import GraphProfile, RadialGrid, radial_derivatives

# certification uses sixth-order centred stencils over the inner 90% of nodes
CERT_TOL = 1e-6
INNER_FRACTION = 0.9
# within this radius substeps shrink like r, so the (n-1)/r term does not
# cost RK4 its order (a fixed physical length keeps refinement consistent)
AXIS_LAYER = 1.0


class SolitonError(RuntimeError):
    pass


@dataclass
class SolitonProfile:
    kind: str
    parameter: float
    n: int
    profile: GraphProfile
    residual_max: float
    asymptotic_slope_ratio: float
    shooting: list[tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def u(self) -> np.ndarray:
        return self.profile.u


Forcing = Callable[[float, float, float], float]


def _slope_rate(r: float, u: float, p: float, n: int, forcing: Forcing, axis_rate: float) -> float:
    if r == 0.0:
        return axis_rate
    return (1.0 + p * p) * (forcing(r, u, p) - (n - 1) * p / r)


def integrate_radial(
    forcing: Forcing,
    u0: float,
    axis_rate: float,
    n: int,
    h: float,
    size: int,
    substeps: int = 4,
    max_substeps: int = 512,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for (u, u') from the axis with u'(0) = 0.

    `axis_rate` is the limit u''(0), needed because (n-1)u'/r is 0/0 there.
    Returns heights and slopes on the grid r_i = i h.  Nodes past a failure
    (non-finite state, or stiffness needing more than `max_substeps`) are NaN.
    """
    u_out = np.full(size, np.nan)
    p_out = np.full(size, np.nan)
    u, p = float(u0), 0.0
    u_out[0], p_out[0] = u, p
    f = lambda r, u, p: _slope_rate(r, u, p, n, forcing, axis_rate)  # noqa: E731
    with np.errstate(all="ignore"):
        for i in range(1, size):
            r0 = (i - 1) * h
            m = substeps
            if r0 < AXIS_LAYER:
                m = math.ceil(substeps * AXIS_LAYER / max(r0, 0.5 * h))
            if r0 > 0:
                # keep k * |df/dp| inside the RK4 stability interval
                dp = 1e-6 * max(1.0, abs(p))
                stiff = abs(f(r0, u, p + dp) - f(r0, u, p)) / dp
                if not math.isfinite(stiff) or stiff * h > 1.5 * max_substeps:
                    return u_out, p_out
                m = max(m, math.ceil(stiff * h / 1.5))
            k = h / m
            for s in range(m):
                r = r0 + s * k
                a_u, a_p = p, f(r, u, p)
                b_u, b_p = p + 0.5 * k * a_p, f(r + 0.5 * k, u + 0.5 * k * a_u, p + 0.5 * k * a_p)
                c_u, c_p = p + 0.5 * k * b_p, f(r + 0.5 * k, u + 0.5 * k * b_u, p + 0.5 * k * b_p)
                d_u, d_p = p + k * c_p, f(r + k, u + k * c_u, p + k * c_p)
                u += k * (a_u + 2.0 * b_u + 2.0 * c_u + d_u) / 6.0
                p += k * (a_p + 2.0 * b_p + 2.0 * c_p + d_p) / 6.0
                if not (math.isfinite(u) and math.isfinite(p)):
                    return u_out, p_out
            u_out[i], p_out[i] = u, p
    return u_out, p_out


def high_order_derivatives(u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Sixth-order centred derivatives of an even function; the last three
    nodes (stencil incomplete) are NaN."""
    ext = np.concatenate([u[3:0:-1], u])
    c1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
    c2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
    du = np.full(u.size, np.nan)
    d2u = np.full(u.size, np.nan)
    m = u.size - 3
    du[:m] = sum(c1[j] * ext[j : j + m] for j in range(7)) / h
    d2u[:m] = sum(c2[j] * ext[j : j + m] for j in range(7)) / h**2
    du[0] = 0.0
    return du, d2u


def _operator(profile: GraphProfile, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = profile.grid
    if order == 2:
        du, d2u = radial_derivatives(profile.u, g.h)
    elif order == 6:
        du, d2u = high_order_derivatives(profile.u, g.h)
    else:
        raise ValueError(f"order must be 2 or 6, got {order}")
    lhs = d2u / (1.0 + du**2)
    lhs[1:] += (g.n - 1) * du[1:] / g.r[1:]
    lhs[0] = g.n * d2u[0]
    return lhs, du, d2u


def _max_abs(values: np.ndarray, inner_fraction: float) -> float:
    m = max(1, int(math.floor(inner_fraction * values.size)))
    vals = values[:m]
    vals = vals[np.isfinite(vals)]
    return float(np.max(np.abs(vals))) if vals.size else math.nan


def translation_residual(profile: GraphProfile, N: float, order: int = 2, inner_fraction: float = 1.0) -> float:
    """max |u''/(1+u'^2) + (n-1)u'/r - N| over the nodes."""
    lhs, _, _ = _operator(profile, order)
    return _max_abs(lhs - N, inner_fraction)


def expander_residual(profile: GraphProfile, c: float, order: int = 2, inner_fraction: float = 1.0) -> float:
    """max |u''/(1+u'^2) + (n-1)u'/r - c (u - r u')| over the nodes."""
    lhs, du, _ = _operator(profile, order)
    return _max_abs(lhs - c * (profile.u - profile.r * du), inner_fraction)


def _outer_slope_ratio(r: np.ndarray, p: np.ndarray) -> float:
    outer = r >= 0.75 * r[-1]
    return float(np.dot(p[outer], r[outer]) / np.dot(r[outer], r[outer]))


def translator_profile(N: float, n: int, r_max: float, h: float, substeps: int = 4, tol: float = CERT_TOL) -> SolitonProfile:
    """Bowl soliton with u(0) = 0 translating with speed N."""
    if not N > 0:
        raise ValueError(f"speed must be positive, got {N}")
    grid = RadialGrid.uniform(n, r_max, h)
    u, p = integrate_radial(lambda r, u, p: N, 0.0, N / n, n, h, grid.size, substeps)
    if not np.all(np.isfinite(u)):
        raise SolitonError("translator integration produced non-finite values")
    prof = GraphProfile(grid, u)
    _, _, d2u = _operator(prof, 6)
    inner = np.isfinite(d2u)
    if np.any(d2u[inner] <= 0) or np.any(p[1:] <= 0):
        raise SolitonError("translator profile lost convexity")
    res = translation_residual(prof, N, order=6, inner_fraction=INNER_FRACTION)
    if not res <= tol:
        raise SolitonError(f"translator residual {res:.3e} exceeds {tol:.1e}")
    return SolitonProfile("translator", N, n, prof, res, _outer_slope_ratio(grid.r, p))


def expander_profile(
    c: float,
    n: int,
    target_slope: float,
    r_max: float,
    h: float,
    bracket: tuple[float, float] | None = None,
    iterations: int = 60,
    slope_tol: float = 1e-3,
    substeps: int = 4,
    tol: float = CERT_TOL,
) -> SolitonProfile:
    """Expander H = c <X, nu>, shooting on u(0) so that u'(r_max) = target_slope."""
    if not (c > 0 and target_slope > 0):
        raise ValueError("expander needs c > 0 and target_slope > 0")
    grid = RadialGrid.uniform(n, r_max, h)
    lo, hi = bracket if bracket is not None else (1e-3 / c, 1e3 / c)
    forcing = lambda r, u, p: c * (u - r * p)  # noqa: E731
    history: list[tuple[float, float]] = []

    def shoot(u0: float):
        u, p = integrate_radial(forcing, u0, c * u0 / n, n, h, grid.size, substeps)
        # convex expanders have increasing slope; a lost or oscillating
        # integration only happens for overly steep shots
        ok = np.all(np.isfinite(p)) and np.all(np.diff(p) >= 0)
        slope = p[-1] if ok else math.inf
        history.append((u0, float(slope)))
        return slope - target_slope, u, p

    f_lo, *_ = shoot(lo)
    f_hi, *_ = shoot(hi)
    if not (f_lo < 0 < f_hi):
        raise SolitonError(f"no bracket for u(0) in [{lo:g}, {hi:g}]: outer slopes miss {target_slope}")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid, *_ = shoot(mid)
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    u0 = 0.5 * (lo + hi)
    f_mid, u, p = shoot(u0)
    if not np.all(np.isfinite(u)) or abs(f_mid) > slope_tol:
        raise SolitonError(f"shooting missed the target slope by {f_mid:.3e}")
    prof = GraphProfile(grid, u)
    res = expander_residual(prof, c, order=6, inner_fraction=INNER_FRACTION)
    if not res <= tol:
        raise SolitonError(f"expander residual {res:.3e} exceeds {tol:.1e}")
    return SolitonProfile("expander", c, n, prof, res, _outer_slope_ratio(grid.r, p), history)
