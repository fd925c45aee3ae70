"""Inequalities, ratios and classification indicators over a computed flow.

Monitors never stop a run; they return signed margins (positive = inequality
holds) and time series aligned with the trajectory samples (NaN where a
quantity is undefined at that sample).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    GraphProfile,
    arc_length_derivative,
    derivatives,
    geometry_at,
    laplace_beltrami_radial,
    support_function,
)
from .rescaling import harnack_min, normal_time_derivative
from .solver import FlowTrajectory

HINTS = ("type_iii_consistent", "type_iib_consistent", "inconclusive")


@dataclass
class MonitorConfig:
    C1: float = 0.25
    C2: float = 0.5
    C: float = 1.0
    epsilon: float = 0.5
    c_linear: float = 10.0
    c_growth: float = 1.0
    delta_growth: float = 0.5
    delta0: float | None = None
    # H <= hw_bound * W; None means 2n
    hw_bound: float | None = None
    # (horizontal, vertical) components of the fixed unit vector omega
    omega: tuple[float, float] = (0.0, -1.0)
    pinching_tol: float = 1e-3
    noncollapse_tol: float = 1e-2
    slope_iii: float = 0.05
    slope_iib: float = 0.2
    bound_factor: float = 1.1
    h_floor: float = 1e-8
    interior_fraction: float = 0.9

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.delta_growth > 0:
            raise ValueError(f"delta_growth must be positive, got {self.delta_growth}")
        if not math.isclose(math.hypot(*self.omega), 1.0, rel_tol=1e-9):
            raise ValueError(f"omega must be a unit vector, got {self.omega}")


@dataclass
class MonitorReport:
    name: str
    times: np.ndarray
    series: dict[str, np.ndarray] = field(default_factory=dict)
    violations: dict[str, float] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    classification_hint: str | None = None
    loglog_slope: float | None = None
    extra: dict[str, float] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _nanmin(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.nanmin(a)) if np.any(np.isfinite(a)) else math.nan


def _nanmax(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.nanmax(a)) if np.any(np.isfinite(a)) else math.nan


# -- classification -------------------------------------------------------------


def loglog_slope(times: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of log(values) against log(times), positive entries only."""
    ok = (times > 0) & (values > 0)
    if ok.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(times[ok]), np.log(values[ok]), 1)[0])


def type_classifier(traj: FlowTrajectory, config: MonitorConfig | None = None) -> MonitorReport:
    config = config or MonitorConfig()
    times = traj.times
    if np.count_nonzero(times > 0) < 10:
        raise ValueError(f"classification needs >= 10 samples with t > 0, got {np.count_nonzero(times > 0)}")
    T = times * traj.field("A2").max(axis=1)
    late = times >= 0.5 * times[-1]
    early = (times > 0) & ~late
    slope = loglog_slope(times[late], T[late])
    early_max = float(T[early].max()) if early.any() else 0.0
    bounded = float(T[late].max()) <= config.bound_factor * early_max or float(T.max()) == 0.0
    if slope <= config.slope_iii and bounded:
        hint = "type_iii_consistent"
    elif slope >= config.slope_iib:
        hint = "type_iib_consistent"
    else:
        hint = "inconclusive"
    return MonitorReport(
        "classify",
        times,
        series={"T": T, "A_axis": np.sqrt(traj.field("A2")[:, 0])},
        classification_hint=hint,
        loglog_slope=slope,
        extra={"max_tA2": float(T.max()), "early_max_tA2": early_max},
        provenance={"slope_iii": config.slope_iii, "slope_iib": config.slope_iib, "bound_factor": config.bound_factor},
    )


# -- pinching -------------------------------------------------------------------


def w_range(profile: GraphProfile, omega: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Min and max over the parallel circle of <nu, omega>.

    nu is the normal making <nu, -e_{n+1}> = (1 + u'^2)^{-1/2} positive;
    omega = (horizontal, vertical) with the horizontal part along e_1.
    """
    du, _ = derivatives(profile)
    sq = np.sqrt(1.0 + du**2)
    base = -omega[1] / sq
    spread = abs(omega[0]) * np.abs(du) / sq
    return base - spread, base + spread


def pinching_margins(profile: GraphProfile, config: MonitorConfig) -> dict[str, float]:
    geo = geometry_at(profile)
    H = geo.H
    w_lo, w_hi = w_range(profile, config.omega)
    w_abs = np.maximum(np.abs(w_lo), np.abs(w_hi))
    weight = (1.0 + profile.r**2 + profile.u**2) ** ((1.0 - config.epsilon) / 2.0)
    k = config.hw_bound if config.hw_bound is not None else 2.0 * profile.n
    positive = H > config.h_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_lo = np.where(positive, w_lo / H, np.nan)
        ratio_hi = np.where(positive, w_hi / H, np.nan)
    return {
        "lower": float(np.min(w_lo - config.C1 * H)),
        "upper": float(np.min(config.C2 * H - w_hi)),
        "weighted": float(np.min(config.C * weight * H - w_abs)),
        "hw_bound": float(np.min(k * geo.W - H)),
        "ratio_min": _nanmin(ratio_lo) if positive.any() else math.inf,
        "ratio_max": _nanmax(ratio_hi) if positive.any() else math.inf,
        "masked": float(np.count_nonzero(~positive)),
        "max_H": float(np.max(H)),
    }


def pinching_check(traj: FlowTrajectory, config: MonitorConfig | None = None) -> MonitorReport:
    config = config or MonitorConfig()
    rows = [pinching_margins(s.profile, config) for s in traj.samples]
    keys = rows[0].keys()
    series = {key: np.array([row[key] for row in rows]) for key in keys}
    tol = config.pinching_tol * max(1.0, float(np.max(series["max_H"])))
    report = MonitorReport("pinching", traj.times, series=series, provenance=asdict(config))
    for key in ("lower", "upper", "weighted", "hw_bound"):
        m = series[key]
        report.violations[key] = float(m.min())
        report.checks[f"{key}_preserved"] = bool(m[1:].min() >= m[0] - tol) if m.size > 1 else True
    report.extra["tolerance"] = tol
    report.extra["masked_nodes"] = float(series["masked"].sum())
    report.extra["unbounded_ratio"] = float(not np.all(np.isfinite(series["ratio_max"])))
    return report


# -- evolution identities and gradient ratios ----------------------------------------


def _interior(traj: FlowTrajectory, fraction: float) -> np.ndarray:
    r = traj.grid.r
    return r <= fraction * r[-1]


def w_evolution_residual(traj: FlowTrajectory, config: MonitorConfig | None = None) -> MonitorReport:
    """max over interior nodes of |dW/dt - Lap W - |A|^2 W| at each inner sample."""
    config = config or MonitorConfig()
    inner = _interior(traj, config.interior_fraction)
    W = traj.field("W")
    out = np.full(len(traj), np.nan)
    for k in range(1, len(traj) - 1):
        s = traj.samples[k]
        res = normal_time_derivative(traj, k, W) - laplace_beltrami_radial(s.profile, s.geometry.W) - s.geometry.A2 * s.geometry.W
        out[k] = float(np.max(np.abs(res[inner])))
    h = traj.grid.h
    worst = _nanmax(out)
    return MonitorReport(
        "w_evolution",
        traj.times,
        series={"residual": out},
        violations={"residual": worst},
        extra={"max_residual": worst, "C_h2": worst / h**2},
        provenance={"interior_fraction": config.interior_fraction},
    )


def gradient_ratio(traj: FlowTrajectory, l: int = 1, config: MonitorConfig | None = None) -> MonitorReport:
    """max_p |d^l H / ds^l| / H^{l+1} along the meridian (a lower bound for the tensor norm)."""
    if l not in (1, 2):
        raise ValueError(f"l must be 1 or 2, got {l}")
    config = config or MonitorConfig()
    inner = _interior(traj, config.interior_fraction)
    out = np.empty(len(traj))
    masked = 0
    for k, s in enumerate(traj.samples):
        H = s.geometry.H
        d = arc_length_derivative(s.profile, H)
        if l == 2:
            d = arc_length_derivative(s.profile, d)
        # differentiated one-sided stencils lose an order at the outer node
        ok = (H > config.h_floor) & inner
        masked += int(np.count_nonzero(~ok))
        out[k] = float(np.max(np.abs(d[ok]) / H[ok] ** (l + 1))) if ok.any() else math.nan
    return MonitorReport(
        f"gradient_ratio_{l}",
        traj.times,
        series={"ratio": out},
        extra={"max_ratio": _nanmax(out), "masked_nodes": float(masked)},
        provenance={"interior_fraction": config.interior_fraction},
    )


def harnack_report(traj: FlowTrajectory, config: MonitorConfig | None = None, include_time_term: bool = True) -> MonitorReport:
    """Minimised Harnack expression per inner sample, raw and scaled by max H^3."""
    config = config or MonitorConfig()
    inner = _interior(traj, config.interior_fraction)
    raw = np.full(len(traj), np.nan)
    scaled = np.full(len(traj), np.nan)
    for k in range(1, len(traj) - 1):
        t = traj.samples[k].t
        if include_time_term and not t > 0:
            continue
        z = harnack_min(traj, t, include_time_term).values[inner]
        if np.any(np.isfinite(z)):
            raw[k] = float(np.nanmin(z))
            scaled[k] = raw[k] / max(float(np.max(traj.samples[k].geometry.H)) ** 3, config.h_floor)
    return MonitorReport(
        "harnack",
        traj.times,
        series={"min": raw, "min_over_H3": scaled},
        violations={"min_over_H3": _nanmin(scaled)},
        extra={"min": _nanmin(raw)},
        provenance={"include_time_term": include_time_term, "interior_fraction": config.interior_fraction},
    )


# -- noncollapsing ------------------------------------------------------------------


@dataclass(frozen=True)
class NoncollapseSample:
    r_interior: np.ndarray
    r_exterior: np.ndarray
    delta_in: np.ndarray
    delta_ext: np.ndarray

    @property
    def global_min_delta(self) -> float:
        both = np.concatenate([self.delta_in, self.delta_ext])
        both = both[np.isfinite(both)]
        return float(both.min()) if both.size else math.inf

    @property
    def unbounded_exterior(self) -> np.ndarray:
        return ~np.isfinite(self.r_exterior)

    @property
    def unbounded_interior(self) -> np.ndarray:
        return ~np.isfinite(self.r_interior)


def tangent_ball_radii(
    points: np.ndarray,
    normals: np.ndarray,
    kappa_max: np.ndarray,
    kappa_min: np.ndarray,
    candidates: np.ndarray | None = None,
    chunk: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Largest touching balls on either side of a meridian curve.

    The interior ball at x has centre x + rho nu(x); it avoids every candidate
    y while rho <= |y - x|^2 / (2 <y - x, nu>) for <y - x, nu> > 0.  Radii are
    further capped by the osculating limits 1/kappa_max (interior) and
    -1/kappa_min (exterior, only where kappa_min < 0).
    """
    pts = np.asarray(points, dtype=float)
    nu = np.asarray(normals, dtype=float)
    cand = pts if candidates is None else np.asarray(candidates, dtype=float)
    m = pts.shape[0]
    r_in = np.full(m, np.inf)
    r_ex = np.full(m, np.inf)
    scale = max(1.0, float(np.max(np.abs(cand))))
    for start in range(0, m, chunk):
        sl = slice(start, min(m, start + chunk))
        d = cand[None, :, :] - pts[sl, None, :]
        dist2 = np.einsum("ijk,ijk->ij", d, d)
        proj = np.einsum("ijk,ik->ij", d, nu[sl])
        # skip coincident points and numerically tangent directions
        tiny = 1e-14 * scale * np.sqrt(dist2) + 1e-300
        valid = dist2 > (1e-12 * scale) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(valid & (proj > tiny), dist2 / (2.0 * proj), np.inf)
            down = np.where(valid & (proj < -tiny), dist2 / (-2.0 * proj), np.inf)
        r_in[sl] = up.min(axis=1)
        r_ex[sl] = down.min(axis=1)
    with np.errstate(divide="ignore"):
        cap_in = np.where(kappa_max > 0, 1.0 / kappa_max, np.inf)
        cap_ex = np.where(kappa_min < 0, -1.0 / kappa_min, np.inf)
    return np.minimum(r_in, cap_in), np.minimum(r_ex, cap_ex)


def noncollapse_polyline(points, normals, H, kappa_max, kappa_min, candidates=None) -> NoncollapseSample:
    H = np.asarray(H, dtype=float)
    r_in, r_ex = tangent_ball_radii(points, normals, np.asarray(kappa_max), np.asarray(kappa_min), candidates)
    return NoncollapseSample(r_in, r_ex, H * r_in, H * r_ex)


def noncollapse_delta(profile: GraphProfile) -> NoncollapseSample:
    """Noncollapsing constant delta at every node, searching the meridian plane and its mirror.

    The interior side is the one the upward normal points into (the region
    above a convex graph).
    """
    geo = geometry_at(profile)
    if np.any(geo.H <= 0):
        raise ValueError("noncollapsing needs H > 0 at every node")
    du, _ = derivatives(profile)
    sq = np.sqrt(1.0 + du**2)
    pts = np.column_stack([profile.r, profile.u])
    nu = np.column_stack([-du / sq, 1.0 / sq])
    mirror = np.column_stack([-profile.r[1:], profile.u[1:]])
    cand = np.vstack([pts, mirror])
    kmax = np.maximum(geo.kappa1, geo.kappa2)
    kmin = np.minimum(geo.kappa1, geo.kappa2)
    return noncollapse_polyline(pts, nu, geo.H, kmax, kmin, cand)


def noncollapse_preservation(
    traj: FlowTrajectory, delta0: float | None = None, config: MonitorConfig | None = None
) -> MonitorReport:
    config = config or MonitorConfig()
    series = np.array([noncollapse_delta(s.profile).global_min_delta for s in traj.samples])
    if delta0 is None:
        delta0 = config.delta0 if config.delta0 is not None else float(series[0])
    worst = float(series.min())
    return MonitorReport(
        "noncollapse",
        traj.times,
        series={"global_min_delta": series},
        violations={"delta": worst - delta0},
        checks={"preserved": worst >= delta0 - config.noncollapse_tol},
        extra={"delta0": delta0, "min_delta": worst},
    )


# -- growth conditions and comparison --------------------------------------------------


def eh_conditions(profile: GraphProfile, config: MonitorConfig | None = None) -> MonitorReport:
    """Gradient bound 1/W <= c and growth bound <x, nu>^2 <= c (1 + |x|^2)^{1 - delta}."""
    config = config or MonitorConfig()
    W = geometry_at(profile).W
    upsilon = 1.0 / W
    growth = support_function(profile) ** 2 / (1.0 + profile.r**2 + profile.u**2) ** (1.0 - config.delta_growth)
    i, k = int(np.argmax(upsilon)), int(np.argmax(growth))
    return MonitorReport(
        "eh_conditions",
        np.array([profile.t]),
        series={"upsilon_max": np.array([upsilon[i]]), "growth_max": np.array([growth[k]])},
        violations={"linear": config.c_linear - float(upsilon[i]), "growth": config.c_growth - float(growth[k])},
        checks={"linear": bool(upsilon[i] <= config.c_linear), "growth": bool(growth[k] <= config.c_growth)},
        extra={"upsilon_node": float(i), "growth_node": float(k)},
    )


@dataclass(frozen=True)
class HalfspaceResult:
    contained: bool
    margin: float
    inf_u: float


def halfspace_check(profile: GraphProfile, omega: Sequence[float]) -> HalfspaceResult:
    """Graph lies in {x_{n+1} > inf u} and omega is not parallel to that boundary."""
    omega = np.asarray(omega, dtype=float)
    if not math.isclose(float(np.linalg.norm(omega)), 1.0, rel_tol=1e-9):
        raise ValueError("omega must be a unit vector")
    margin = abs(float(omega[-1]))
    inf_u = float(np.min(profile.u))
    return HalfspaceResult(bool(np.isfinite(inf_u) and margin > 0), margin, inf_u)


def comparison_check(traj1: FlowTrajectory, traj2: FlowTrajectory, tol: float = 1e-3) -> MonitorReport:
    """Track max_p (u1 - u2); ordering u1 <= u2 should persist when it holds initially."""
    g1, g2 = traj1.grid, traj2.grid
    if (g1.n, g1.size) != (g2.n, g2.size) or not math.isclose(g1.h, g2.h):
        raise ValueError("comparison needs identical grids")
    t1, t2 = traj1.times, traj2.times
    if t1.shape != t2.shape or not np.allclose(t1, t2, rtol=1e-9, atol=1e-12):
        raise ValueError("comparison needs identical sample times")
    diff = np.array([float(np.max(a.profile.u - b.profile.u)) for a, b in zip(traj1.samples, traj2.samples)])
    ordered = bool(diff[0] <= tol)
    return MonitorReport(
        "comparison",
        t1,
        series={"max_u1_minus_u2": diff},
        violations={"margin": float(-diff.max())},
        checks={"initially_ordered": ordered, "ordering_preserved": bool(ordered and diff.max() <= tol)},
        extra={"margin": float(-diff.max())},
    )
