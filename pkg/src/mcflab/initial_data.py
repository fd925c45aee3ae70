"""Initial graphs: mollified power graphs |y|^alpha, solitons, planes, tables."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Callable

import numpy as np

from .config import ConfigError, ExperimentConfig
from .geometry import GraphProfile, RadialGrid, geometry_at
from .solitons import expander_profile, translator_profile

# initial max|A|^2 h^2 allowed before the default mollification is widened
RESOLVED_A2H2 = 0.25


def power_graph(alpha: float, eps: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """u(r) = (r^2 + eps^2)^{alpha/2} - eps^alpha, equal to r^alpha when eps = 0."""
    def u(r):
        r = np.asarray(r, dtype=float)
        if eps == 0.0:
            return np.abs(r) ** alpha
        return (r * r + eps * eps) ** (alpha / 2.0) - eps**alpha

    return u


def default_eps(alpha: float, grid: RadialGrid) -> float:
    """2h for alpha < 2, doubled until the axis curvature is resolved; 0 otherwise."""
    if alpha >= 2.0:
        return 0.0
    eps = 2.0 * grid.h
    while True:
        prof = GraphProfile(grid, power_graph(alpha, eps)(grid.r))
        if float(np.max(geometry_at(prof).A2)) * grid.h**2 <= RESOLVED_A2H2 or eps > grid.r_max:
            return eps
        eps *= 2.0


def read_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"r", "u"} <= set(rows[0]):
        raise ConfigError(f"initial_data.path: {path} needs columns r,u")
    try:
        return np.array([float(x["r"]) for x in rows]), np.array([float(x["u"]) for x in rows])
    except ValueError as exc:
        raise ConfigError(f"initial_data.path: {path}: {exc}") from None


def build_initial(config: ExperimentConfig) -> tuple[GraphProfile, dict]:
    """Initial profile plus metadata (e.g. the mollification actually used)."""
    d = config.initial_data
    grid = RadialGrid.uniform(config.n, config.r_max, config.h)
    meta: dict = {"kind": d.kind}
    if d.kind == "power_graph":
        eps = d.eps_smooth if d.eps_smooth is not None else default_eps(d.alpha, grid)
        meta.update(alpha=d.alpha, eps_smooth=eps)
        return GraphProfile(grid, power_graph(d.alpha, eps)(grid.r)), meta
    if d.kind == "plane":
        meta["height"] = d.height
        return GraphProfile(grid, np.full(grid.size, float(d.height))), meta
    if d.kind == "translator":
        sol = translator_profile(d.N, config.n, config.r_max, config.h)
        meta.update(N=d.N, residual=sol.residual_max, slope_ratio=sol.asymptotic_slope_ratio)
        return sol.profile, meta
    if d.kind == "expander":
        sol = expander_profile(d.c, config.n, d.slope, config.r_max, config.h)
        meta.update(c=d.c, slope=d.slope, residual=sol.residual_max, u0=float(sol.u[0]))
        return sol.profile, meta
    r, u = read_table(d.path)
    if r.shape != grid.r.shape or not np.allclose(r, grid.r, rtol=0, atol=1e-9 * config.h):
        raise ConfigError(f"initial_data.path: table radii do not match the grid (r_max={config.r_max}, h={config.h})")
    meta["path"] = d.path
    return GraphProfile(grid, u), meta


def closed_form(config: ExperimentConfig) -> Callable[[np.ndarray], np.ndarray] | None:
    """Initial height as a function of r when one exists (for domain doubling)."""
    d = config.initial_data
    if d.kind == "power_graph":
        grid = RadialGrid.uniform(config.n, config.r_max, config.h)
        eps = d.eps_smooth if d.eps_smooth is not None else default_eps(d.alpha, grid)
        return power_graph(d.alpha, eps)
    if d.kind == "plane":
        return lambda r: np.full(np.shape(r), float(d.height))
    return None
