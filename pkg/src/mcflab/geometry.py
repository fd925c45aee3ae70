"""Radial graphs x_{n+1} = u(|y|) over R^n and their pointwise geometry.

The upward unit normal is used throughout, so W = <nu, -e_{n+1}> is reported
as the positive quantity (1 + u'^2)^{-1/2} and convex graphs have H > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_NODES = 8


class NumericalFailure(RuntimeError):
    """Non-finite values appeared in a profile or a derived field."""

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message if node is None else f"{message} (node {node})")
        self.node = node


@dataclass(frozen=True)
class RadialGrid:
    n: int
    h: float
    size: int
    r: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.size < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes, got {self.size}")
        if not self.h > 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        r = self.h * np.arange(self.size, dtype=float)
        r.flags.writeable = False
        object.__setattr__(self, "r", r)

    @classmethod
    def uniform(cls, n: int, r_max: float, h: float) -> "RadialGrid":
        steps = r_max / h
        m = int(round(steps))
        if abs(steps - m) > 1e-9 * max(1.0, steps):
            raise ValueError(f"r_max/h must be an integer, got {steps!r}")
        return cls(n=n, h=float(h), size=m + 1)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def scaled(self, factor: float) -> "RadialGrid":
        return RadialGrid(n=self.n, h=self.h * factor, size=self.size)


@dataclass(frozen=True)
class GraphProfile:
    grid: RadialGrid
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != (self.grid.size,):
            raise ValueError(f"u has shape {u.shape}, grid has {self.grid.size} nodes")
        bad = np.flatnonzero(~np.isfinite(u))
        if bad.size:
            raise NumericalFailure("non-finite height", int(bad[0]))
        if self.t < 0:
            raise ValueError(f"flow time must be >= 0, got {self.t}")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @classmethod
    def from_function(cls, grid: RadialGrid, func, t: float = 0.0) -> "GraphProfile":
        return cls(grid, func(grid.r), t)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def r(self) -> np.ndarray:
        return self.grid.r


@dataclass(frozen=True)
class GeometrySample:
    W: np.ndarray
    H: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    A2: np.ndarray

    @property
    def A(self) -> np.ndarray:
        return np.sqrt(self.A2)


def radial_derivatives(u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second r-derivatives of an even function sampled from r = 0.

    Second-order centred stencils inside, the even extension u(-h) = u(h) at
    the axis and second-order one-sided stencils at the outer node.
    """
    u = np.asarray(u, dtype=float)
    if u.size < MIN_NODES:
        raise ValueError(f"need at least {MIN_NODES} nodes, got {u.size}")
    du = np.empty_like(u)
    d2u = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    d2u[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    du[0] = 0.0
    d2u[0] = 2.0 * (u[1] - u[0]) / h**2
    du[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    d2u[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2
    return du, d2u


def derivatives(profile: GraphProfile) -> tuple[np.ndarray, np.ndarray]:
    return radial_derivatives(profile.u, profile.grid.h)


def _over_r(f: np.ndarray, df: np.ndarray, r: np.ndarray) -> np.ndarray:
    # f'(r)/r with the axis value replaced by its limit f''(0)
    out = np.empty_like(f)
    out[1:] = f[1:] / r[1:]
    out[0] = df[0]
    return out


def geometry_from_derivatives(n: int, r: np.ndarray, du: np.ndarray, d2u: np.ndarray) -> GeometrySample:
    q = 1.0 + du**2
    sq = np.sqrt(q)
    W = 1.0 / sq
    kappa1 = d2u / (q * sq)
    kappa2 = _over_r(du, d2u, r) / sq
    H = kappa1 + (n - 1) * kappa2
    A2 = kappa1**2 + (n - 1) * kappa2**2
    return GeometrySample(W=W, H=H, kappa1=kappa1, kappa2=kappa2, A2=A2)


def geometry_at(profile: GraphProfile) -> GeometrySample:
    du, d2u = derivatives(profile)
    geo = geometry_from_derivatives(profile.n, profile.r, du, d2u)
    bad = np.flatnonzero(~np.isfinite(geo.A2) | ~np.isfinite(geo.H))
    if bad.size:
        raise NumericalFailure("non-finite curvature", int(bad[0]))
    return geo


def laplace_beltrami_radial(profile: GraphProfile, f: np.ndarray) -> np.ndarray:
    """Induced-metric Laplacian of a radial function f on the graph.

    In divergence form this is (r^{n-1} sqrt(q))^{-1} d/dr(r^{n-1} f' / sqrt(q))
    with q = 1 + u'^2; on the axis it closes to n f''(0).
    """
    f = np.asarray(f, dtype=float)
    if f.shape != profile.u.shape:
        raise ValueError(f"f has shape {f.shape}, profile has {profile.u.shape}")
    n, r, h = profile.n, profile.r, profile.grid.h
    du, d2u = derivatives(profile)
    df, d2f = radial_derivatives(f, h)
    q = 1.0 + du**2
    lap = d2f / q + (n - 1) * _over_r(df, d2f, r) / q - du * d2u * df / q**2
    lap[0] = n * d2f[0]
    return lap


def arc_length_derivative(profile: GraphProfile, f: np.ndarray) -> np.ndarray:
    """Derivative of f with respect to meridian arc length."""
    du, _ = derivatives(profile)
    df, _ = radial_derivatives(np.asarray(f, dtype=float), profile.grid.h)
    return df / np.sqrt(1.0 + du**2)


def support_function(profile: GraphProfile, du: np.ndarray | None = None) -> np.ndarray:
    """<X, nu> = (u - r u') / sqrt(1 + u'^2) for the upward normal."""
    if du is None:
        du, _ = derivatives(profile)
    return (profile.u - profile.r * du) / np.sqrt(1.0 + du**2)
