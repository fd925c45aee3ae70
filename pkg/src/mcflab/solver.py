"""Explicit method-of-lines solver for radially symmetric graphical MCF.

    u_t = u'' / (1 + u'^2) + (n - 1) u' / r,     u_t(0) = n u''(0)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import (
    GeometrySample,
    GraphProfile,
    NumericalFailure,
    RadialGrid,
    geometry_at,
    radial_derivatives,
)

log = logging.getLogger(__name__)

OUTER_BCS = ("one_sided", "frozen")
TERMINATIONS = ("reached_t_end", "blowup_unresolved", "step_cap")

# halve dt while max|A|^2 * dt exceeds this
CURVATURE_DT_LIMIT = 0.1


@dataclass
class SolverConfig:
    cfl_safety: float = 0.4
    t_end: float = 5.0
    sample_stride: int = 100
    outer_bc: str = "one_sided"
    max_steps: int = 10_000_000
    blowup_threshold: float = 1.0

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.sample_stride < 1:
            raise ValueError(f"sample_stride must be >= 1, got {self.sample_stride}")
        if self.outer_bc not in OUTER_BCS:
            raise ValueError(f"outer_bc must be one of {OUTER_BCS}, got {self.outer_bc!r}")


@dataclass(frozen=True)
class Sample:
    t: float
    profile: GraphProfile
    geometry: GeometrySample


@dataclass
class StepStats:
    t: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    max_A2: list[float] = field(default_factory=list)


@dataclass
class FlowTrajectory:
    samples: list[Sample]
    stats: StepStats
    r_max: float
    termination: str = "reached_t_end"

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def grid(self) -> RadialGrid:
        return self.samples[0].profile.grid

    def __len__(self):
        return len(self.samples)

    def heights(self) -> np.ndarray:
        return np.array([s.profile.u for s in self.samples])

    def field(self, name: str) -> np.ndarray:
        """Stack one GeometrySample field over samples, shape (samples, nodes)."""
        return np.array([getattr(s.geometry, name) for s in self.samples])

    def nearest(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


class SolverFailure(NumericalFailure):
    def __init__(self, message: str, node: int | None, trajectory: FlowTrajectory):
        super().__init__(message, node)
        self.trajectory = trajectory


def _rhs_values(u: np.ndarray, n: int, r: np.ndarray, h: float) -> np.ndarray:
    du, d2u = radial_derivatives(u, h)
    out = d2u / (1.0 + du**2)
    out[1:] += (n - 1) * du[1:] / r[1:]
    out[0] = n * d2u[0]
    return out


def rhs(profile: GraphProfile) -> np.ndarray:
    """Vertical velocity u_t of the graph, equal to sqrt(1 + u'^2) H."""
    g = profile.grid
    out = _rhs_values(profile.u, g.n, g.r, g.h)
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise NumericalFailure("non-finite velocity", int(bad[0]))
    return out


def base_dt(grid: RadialGrid, config: SolverConfig) -> float:
    return config.cfl_safety * grid.h**2 / 2.0


def choose_dt(grid: RadialGrid, max_A2: float, config: SolverConfig) -> float:
    dt = base_dt(grid, config)
    while max_A2 * dt > CURVATURE_DT_LIMIT:
        dt /= 2.0
    return dt


def _velocity(u: np.ndarray, grid: RadialGrid, outer_bc: str) -> np.ndarray:
    v = _rhs_values(u, grid.n, grid.r, grid.h)
    if outer_bc == "frozen":
        v[-1] = 0.0
    return v


def _midpoint(u: np.ndarray, grid: RadialGrid, dt: float, outer_bc: str) -> np.ndarray:
    half = u + 0.5 * dt * _velocity(u, grid, outer_bc)
    return u + dt * _velocity(half, grid, outer_bc)


def step(profile: GraphProfile, config: SolverConfig, dt: float | None = None) -> tuple[GraphProfile, float]:
    """One explicit midpoint step; dt defaults to the curvature-limited CFL value."""
    grid = profile.grid
    if dt is None:
        dt = choose_dt(grid, float(np.max(geometry_at(profile).A2)), config)
    new = _midpoint(profile.u, grid, dt, config.outer_bc)
    bad = np.flatnonzero(~np.isfinite(new))
    if bad.size:
        raise NumericalFailure("non-finite height after step", int(bad[0]))
    return GraphProfile(grid, new, profile.t + dt), dt


def evolve(profile: GraphProfile, config: SolverConfig) -> FlowTrajectory:
    grid = profile.grid
    geo = geometry_at(profile)
    traj = FlowTrajectory([Sample(profile.t, profile, geo)], StepStats(), grid.r_max)
    u, t = profile.u.copy(), profile.t
    t_end = profile.t + config.t_end
    steps = 0
    h2 = grid.h**2
    while True:
        max_A2 = float(np.max(geo.A2))
        if t >= t_end - 1e-12 * max(1.0, t_end):
            traj.termination = "reached_t_end"
            break
        if max_A2 * h2 > config.blowup_threshold:
            traj.termination = "blowup_unresolved"
            break
        if steps >= config.max_steps:
            traj.termination = "step_cap"
            break
        dt = min(choose_dt(grid, max_A2, config), t_end - t)
        u = _midpoint(u, grid, dt, config.outer_bc)
        bad = np.flatnonzero(~np.isfinite(u))
        if bad.size:
            raise SolverFailure(f"non-finite height at t={t + dt:.6g}", int(bad[0]), traj)
        t += dt
        steps += 1
        current = GraphProfile(grid, u, t)
        geo = geometry_at(current)
        traj.stats.t.append(t)
        traj.stats.dt.append(dt)
        traj.stats.max_A2.append(float(np.max(geo.A2)))
        if steps % config.sample_stride == 0 or t >= t_end - 1e-12 * max(1.0, t_end):
            traj.samples.append(Sample(t, current, geo))
    if traj.samples[-1].t != t:
        traj.samples.append(Sample(t, GraphProfile(grid, u, t), geo))
    log.debug("evolve: %d steps, termination=%s", steps, traj.termination)
    return traj


@dataclass
class DomainReport:
    r_max: float
    discrepancy: float
    window: float
    terminations: tuple[str, str]


def domain_sensitivity(
    base_config: SolverConfig,
    initial: Callable[[np.ndarray], np.ndarray],
    n: int,
    r_max: float,
    h: float,
) -> DomainReport:
    """Evolve on [0, r_max] and [0, 2 r_max]; compare on [0, r_max/2].

    `initial` evaluates the closed-form initial height at arbitrary radii.
    """
    runs = []
    for R in (r_max, 2.0 * r_max):
        grid = RadialGrid.uniform(n, R, h)
        runs.append(evolve(GraphProfile.from_function(grid, initial), base_config))
    small, big = runs
    inner = small.grid.r <= r_max / 2.0
    t_common = min(small.times[-1], big.times[-1])
    worst = 0.0
    big_times = big.times
    for s in small.samples:
        if s.t > t_common:
            break
        k = int(np.argmin(np.abs(big_times - s.t)))
        if abs(big_times[k] - s.t) > 1e-9 * max(1.0, s.t):
            continue
        diff = s.profile.u[inner] - big.samples[k].profile.u[: s.profile.u.size][inner]
        worst = max(worst, float(np.max(np.abs(diff))))
    return DomainReport(r_max, worst, t_common, (small.termination, big.termination))
