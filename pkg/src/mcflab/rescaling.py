"""Parabolic rescalings of a computed flow.

* expander normalisation  x -> x / sqrt(2t + 1),  s = log(2t + 1) / 2
* essential blow-up selection maximising t (j - t) H^2 over stored samples,
  followed by M^j_t = L (M_{t_j + t/L^2} - x(P_j, t_j))
* the minimised Harnack expression dH/dt + H/2t - |dH/ds|^2 / kappa1
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GeometrySample,
    GraphProfile,
    geometry_at,
    radial_derivatives,
)
from .solver import FlowTrajectory, rhs

KAPPA_FLOOR = 1e-8


@dataclass(frozen=True)
class NormalizedState:
    s: float
    profile: GraphProfile
    source_t: float

    @property
    def scale(self) -> float:
        return math.sqrt(2.0 * self.source_t + 1.0)


def normalize(profile: GraphProfile) -> NormalizedState:
    lam = math.sqrt(2.0 * profile.t + 1.0)
    scaled = GraphProfile(profile.grid.scaled(1.0 / lam), profile.u / lam, profile.t)
    return NormalizedState(0.5 * math.log(2.0 * profile.t + 1.0), scaled, profile.t)


def denormalize(state: NormalizedState) -> GraphProfile:
    lam = state.scale
    p = state.profile
    return GraphProfile(p.grid.scaled(lam), p.u * lam, state.source_t)


# -- Type IIb blow-up selection -------------------------------------------------


@dataclass(frozen=True)
class BlowupSelection:
    j: float
    gamma: float
    sample_index: int
    p_index: int
    t_sel: float
    L: float
    score: float
    effective_gamma: float
    base_point: tuple[float, float]

    @property
    def alpha_j(self) -> float:
        return -self.t_sel * self.L**2

    @property
    def omega_j(self) -> float:
        return (self.j - self.t_sel) * self.L**2


def blowup_scores(times: np.ndarray, H: np.ndarray, j: float) -> np.ndarray:
    """t (j - t) H^2 for a (samples, nodes) table of mean curvatures."""
    t = np.asarray(times, dtype=float)[:, None]
    H = np.asarray(H, dtype=float)
    return t * (j - t) * (H * H)


def argmax_first(scores: np.ndarray) -> tuple[int, int]:
    """Row-major first maximiser, i.e. earliest time then smallest radius."""
    k = int(np.argmax(scores))
    return divmod(k, scores.shape[1])


def select_from_table(times: np.ndarray, H: np.ndarray, j: float) -> tuple[int, int, float]:
    scores = blowup_scores(times, H, j)
    a, b = argmax_first(scores)
    return a, b, float(scores[a, b])


def select_blowup_points(traj: FlowTrajectory, j: float, gamma: float = 1.0) -> BlowupSelection:
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    times = traj.times
    if not (times[0] <= 1e-12 and times[-1] >= j - 1e-9 * max(1.0, j)) or j <= 0:
        raise ValueError(f"trajectory covers [{times[0]:g}, {times[-1]:g}], not [0, {j:g}]")
    window = np.flatnonzero(times <= j + 1e-12)
    H = traj.field("H")[window]
    a, b, score = select_from_table(times[window], H, j)
    if not score > 0:
        raise ValueError("t (j - t) H^2 vanishes on every sample; nothing to rescale")
    # loss from sampling: best score on every other sample vs all samples
    coarse = blowup_scores(times[window][::2], H[::2], j).max()
    k = int(window[a])
    prof = traj.samples[k].profile
    return BlowupSelection(
        j=float(j),
        gamma=float(gamma),
        sample_index=k,
        p_index=b,
        t_sel=float(times[k]),
        L=float(abs(H[a, b])),
        score=score,
        effective_gamma=float(coarse / score),
        base_point=(float(prof.r[b]), float(prof.u[b])),
    )


@dataclass(frozen=True)
class RescaledSlice:
    t_prime: float
    profile: GraphProfile
    geometry: GeometrySample
    axis_offset: float
    source_index: int


@dataclass
class RescaledFlow:
    selection: BlowupSelection
    slices: list[RescaledSlice] = field(default_factory=list)

    def at_zero(self) -> RescaledSlice:
        for s in self.slices:
            if s.source_index == self.selection.sample_index:
                return s
        raise LookupError("selected sample missing from rescaled flow")

    @property
    def base_curvature(self) -> float:
        return float(self.at_zero().geometry.H[self.selection.p_index])


def rescale_flow(traj: FlowTrajectory, sel: BlowupSelection) -> RescaledFlow:
    """Apply X -> L (X - X(P_j, t_j)), t -> L^2 (t - t_j) to each sample in [0, j].

    Each slice stays a radial graph about its own (shifted) axis: radii are
    multiplied by L and the axis sits at horizontal offset -L r_P.
    """
    if not 0 <= sel.sample_index < len(traj):
        raise ValueError("selection does not belong to this trajectory")
    r_p, u_p = sel.base_point
    L = sel.L
    flow = RescaledFlow(sel)
    for k, s in enumerate(traj.samples):
        if s.t > sel.j + 1e-12:
            break
        prof = GraphProfile(s.profile.grid.scaled(L), L * (s.profile.u - u_p), 0.0)
        flow.slices.append(RescaledSlice(L * L * (s.t - sel.t_sel), prof, geometry_at(prof), -L * r_p, k))
    return flow


@dataclass(frozen=True)
class SolitonMatch:
    j: float
    N: float
    residual: float
    nodes: int
    flat: bool


def soliton_match(rflow: RescaledFlow, fit_radius: float = 2.0) -> SolitonMatch:
    """Least-squares translation speed of the t' = 0 slice near the base point.

    The fit uses nodes whose rescaled distance to the base point is at most
    `fit_radius`; the residual is the max deviation of u_t from that speed.
    """
    sl = rflow.at_zero()
    prof = sl.profile
    p = rflow.selection.p_index
    x = prof.r - prof.r[p]
    z = prof.u - prof.u[p]
    window = np.hypot(x, z) <= fit_radius
    v = rhs(prof)[window]
    if np.max(np.abs(v)) < 1e-12:
        return SolitonMatch(rflow.selection.j, 0.0, 0.0, int(window.sum()), True)
    N = float(np.mean(v))
    return SolitonMatch(rflow.selection.j, N, float(np.max(np.abs(v - N))), int(window.sum()), False)


def soliton_match_trend(traj: FlowTrajectory, js, gamma: float = 1.0, fit_radius: float = 2.0) -> list[SolitonMatch]:
    return [soliton_match(rescale_flow(traj, select_blowup_points(traj, j, gamma)), fit_radius) for j in js]


# -- time derivatives in normal parametrisation ------------------------------------


def _three_point(times: np.ndarray, values: np.ndarray, k: int) -> np.ndarray:
    """d/dt at sample k from samples k-1, k, k+1 (nonuniform spacing)."""
    t0, t1, t2 = times[k - 1], times[k], times[k + 1]
    a, b = t1 - t0, t2 - t1
    return (-(b / (a * (a + b))) * values[k - 1] + ((b - a) / (a * b)) * values[k] + (a / (b * (a + b))) * values[k + 1])


def normal_time_derivative(traj: FlowTrajectory, k: int, values: np.ndarray) -> np.ndarray:
    """d/dt of a scalar field following normal trajectories at sample k.

    `values` is the (samples, nodes) table of the field at fixed r.  Graph
    points slide tangentially with radial speed -u_t u'/(1 + u'^2), so
    d/dt|normal f = d/dt|graph f - u_t u' f_r / (1 + u'^2).
    """
    if not 0 < k < len(traj) - 1:
        raise ValueError(f"sample {k} lacks neighbours for a centred time derivative")
    prof = traj.samples[k].profile
    dt_graph = _three_point(traj.times, values, k)
    du, _ = radial_derivatives(prof.u, prof.grid.h)
    df, _ = radial_derivatives(values[k], prof.grid.h)
    return dt_graph - rhs(prof) * du * df / (1.0 + du**2)


@dataclass(frozen=True)
class HarnackSample:
    t: float
    values: np.ndarray
    masked: np.ndarray

    @property
    def minimum(self) -> float:
        v = self.values[~self.masked]
        return float(np.min(v)) if v.size else math.nan


def harnack_min(traj: FlowTrajectory, t: float, include_time_term: bool = True) -> HarnackSample:
    """Per-node infimum over tangent V of the Harnack expression.

    Attained at V = -h^{-1} grad H; nodes with kappa1 <= KAPPA_FLOOR are masked.
    """
    k = traj.nearest(t)
    s = traj.samples[k]
    H_table = traj.field("H")
    dH = normal_time_derivative(traj, k, H_table)
    du, _ = radial_derivatives(s.profile.u, s.profile.grid.h)
    dH_ds = radial_derivatives(s.geometry.H, s.profile.grid.h)[0] / np.sqrt(1.0 + du**2)
    k1 = s.geometry.kappa1
    masked = k1 <= KAPPA_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        z = dH - dH_ds**2 / k1
    if include_time_term:
        if not s.t > 0:
            raise ValueError("time term H/2t needs t > 0")
        z = z + s.geometry.H / (2.0 * s.t)
    z = np.where(masked, np.nan, z)
    return HarnackSample(s.t, z, masked)
