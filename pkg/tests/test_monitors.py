import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.geometry import GraphProfile, geometry_at
from mcflab.initial_data import default_eps, power_graph
from mcflab.monitors import (
    MonitorConfig,
    comparison_check,
    eh_conditions,
    gradient_ratio,
    halfspace_check,
    loglog_slope,
    noncollapse_delta,
    noncollapse_polyline,
    noncollapse_preservation,
    pinching_check,
    pinching_margins,
    type_classifier,
    w_evolution_residual,
)
from mcflab.solitons import expander_profile
from mcflab.solver import FlowTrajectory, Sample, SolverConfig, StepStats, evolve

from conftest import grid, paraboloid


def frozen(profile, times):
    return FlowTrajectory(
        [Sample(t, GraphProfile(profile.grid, profile.u, t), geometry_at(profile)) for t in times], StepStats(), profile.grid.r_max
    )


def test_config_validation():
    for kwargs in (dict(epsilon=0), dict(delta_growth=-1), dict(omega=(1.0, 1.0))):
        with pytest.raises(ValueError):
            MonitorConfig(**kwargs)


# -- classifier ----------------------------------------------------------------------


def test_loglog_slope_power_law():
    t = np.linspace(1, 5, 20)
    assert loglog_slope(t, 3 * t**1.5) == pytest.approx(1.5)


def test_classifier_plane():
    g = grid()
    traj = evolve(GraphProfile(g, np.zeros(g.size)), SolverConfig(t_end=1.0, sample_stride=100))
    rep = type_classifier(traj)
    assert np.all(rep.series["T"] == 0) and rep.classification_hint == "type_iii_consistent"


def test_classifier_translator(translator_run):
    _, traj = translator_run
    rep = type_classifier(traj)
    assert rep.loglog_slope == pytest.approx(1.0, abs=0.05)
    assert rep.classification_hint == "type_iib_consistent"


def test_classifier_expander():
    sol = expander_profile(1.0, 2, 1.0, 20.0, 0.1)
    traj = evolve(sol.profile, SolverConfig(t_end=3.0, sample_stride=100))
    # |A|^2 ~ 1 / (2t + 1): T saturates, slope small over the late window
    rep = type_classifier(traj)
    assert rep.loglog_slope <= 0.2
    assert rep.series["T"][-1] <= 1.0 / 2 * np.max(geometry_at(sol.profile).A2) * 1.05


def test_classifier_needs_samples(paraboloid_run):
    short = FlowTrajectory(paraboloid_run.samples[:5], StepStats(), paraboloid_run.r_max)
    with pytest.raises(ValueError):
        type_classifier(short)


# -- pinching ------------------------------------------------------------------------


def test_paraboloid_ratio_range():
    m = pinching_margins(paraboloid(r_max=30.0, h=0.05), MonitorConfig())
    assert m["ratio_min"] == pytest.approx(0.25, abs=1e-12)
    assert 0.49 < m["ratio_max"] < 0.5
    assert m["lower"] >= -1e-12 and m["upper"] >= -1e-12
    assert m["hw_bound"] == pytest.approx(0.0, abs=1e-12)


def test_pinching_plane_unbounded():
    g = grid()
    rep = pinching_check(frozen(GraphProfile(g, np.zeros(g.size)), [0.0, 1.0]))
    assert rep.extra["unbounded_ratio"] == 1.0 and rep.extra["masked_nodes"] == 2 * g.size


def test_pinching_preserved_on_paraboloid(paraboloid_run):
    rep = pinching_check(paraboloid_run)
    assert rep.checks["hw_bound_preserved"] and rep.checks["lower_preserved"]


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(0.5, 2.0))
def test_pinching_verdict_scale_invariant(lam):
    base = evolve(paraboloid(r_max=4.0, h=0.05), SolverConfig(t_end=0.05, sample_stride=20))
    g = base.grid.scaled(lam)
    scaled = FlowTrajectory(
        [Sample(s.t * lam**2, GraphProfile(g, lam * s.profile.u, s.t * lam**2), geometry_at(GraphProfile(g, lam * s.profile.u))) for s in base.samples],
        StepStats(),
        g.r_max,
    )
    cfg = MonitorConfig(pinching_tol=0.0)
    a, b = pinching_check(base, cfg), pinching_check(scaled, cfg)
    for key in ("lower_preserved", "upper_preserved", "hw_bound_preserved"):
        assert a.checks[key] == b.checks[key]


def test_w_range_tilted_omega():
    p = paraboloid()
    tilt = (1 / math.sqrt(2), -1 / math.sqrt(2))
    m = pinching_margins(p, MonitorConfig(omega=tilt))
    assert np.isfinite(m["lower"])


# -- W evolution and gradient ratios ---------------------------------------------------


def test_w_residual_plane():
    g = grid()
    traj = evolve(GraphProfile(g, np.zeros(g.size)), SolverConfig(t_end=0.01, sample_stride=4))
    assert w_evolution_residual(traj).extra["max_residual"] <= 1e-12


def test_w_residual_paraboloid_reports_constant(paraboloid_run):
    window = FlowTrajectory([s for s in paraboloid_run.samples if 0.1 <= s.t <= 0.5], StepStats(), paraboloid_run.r_max)
    rep = w_evolution_residual(window)
    assert rep.extra["max_residual"] < 0.05
    assert rep.extra["C_h2"] == pytest.approx(rep.extra["max_residual"] / 0.05**2)


def test_gradient_ratio_sphere_cap_is_zero():
    R = 10.0
    ratios = []
    for h in (0.02, 0.01):
        g = grid(2, 5.0, h)
        cap = GraphProfile(g, R - np.sqrt(R**2 - g.r**2))
        ratios.append(gradient_ratio(frozen(cap, [0.0]), 1).extra["max_ratio"])
    # zero up to stencil error; the axis closure makes it first order next to r = 0
    assert ratios[1] < 1e-3 and ratios[0] / ratios[1] >= 1.8


def test_gradient_ratio_translator_steady(translator_run):
    _, traj = translator_run
    series = gradient_ratio(traj, 1).series["ratio"]
    assert np.all(np.isfinite(series))
    assert np.ptp(series) <= 1e-2 * series.max()


def test_gradient_ratio_rejects_order():
    with pytest.raises(ValueError):
        gradient_ratio(frozen(paraboloid(), [0.0]), 3)


# -- noncollapsing ----------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_delta_equals_n(n):
    R, h = 2.0, 0.02
    m = int(round(2 * math.pi * R / h))
    theta = np.linspace(0, 2 * math.pi, m, endpoint=False)
    pts = R * np.column_stack([np.cos(theta), np.sin(theta)])
    nu = -pts / R  # interior side
    k = np.full(m, 1 / R)
    s = noncollapse_polyline(pts, nu, np.full(m, n / R), k, k)
    assert np.allclose(s.delta_in, n, rtol=2 * h)
    assert np.all(s.unbounded_exterior)


def test_paraboloid_origin_ball():
    s = noncollapse_delta(paraboloid(r_max=5.0, h=0.01))
    assert s.r_interior[0] == pytest.approx(0.5, rel=1e-6)
    assert s.delta_in[0] == pytest.approx(2.0, rel=1e-6)
    assert s.unbounded_exterior[0]


def test_paraboloid_interior_ball_is_contained():
    # brute-force containment: the ball of radius r_in at each node stays above the graph
    p = paraboloid(r_max=5.0, h=0.05)
    s = noncollapse_delta(p)
    du = 2 * p.r
    nu = np.column_stack([-du, np.ones_like(du)]) / np.sqrt(1 + du**2)[:, None]
    dense = np.linspace(-5, 5, 4001)
    curve = np.column_stack([dense, dense**2])
    for i in range(0, p.grid.size - 10, 7):
        centre = np.array([p.r[i], p.u[i]]) + s.r_interior[i] * nu[i]
        assert np.min(np.linalg.norm(curve - centre, axis=1)) >= s.r_interior[i] * (1 - 1e-3)


def test_noncollapse_rejects_plane():
    g = grid()
    with pytest.raises(ValueError):
        noncollapse_delta(GraphProfile(g, np.zeros(g.size)))


def test_noncollapse_frozen_series_constant():
    rep = noncollapse_preservation(frozen(paraboloid(), [0.0, 0.5, 1.0]))
    series = rep.series["global_min_delta"]
    assert np.all(series == series[0]) and rep.checks["preserved"]


def test_noncollapse_translator_constant(translator_run):
    _, traj = translator_run
    sub = FlowTrajectory(traj.samples[::4], StepStats(), traj.r_max)
    rep = noncollapse_preservation(sub)
    assert np.ptp(rep.series["global_min_delta"]) <= 1e-2 and rep.checks["preserved"]


# -- growth conditions, half-space, comparison ---------------------------------------------


def test_eh_plane():
    g = grid()
    rep = eh_conditions(GraphProfile(g, np.zeros(g.size)), MonitorConfig(c_linear=1.0))
    assert rep.passed and rep.series["upsilon_max"][0] == 1.0 and rep.series["growth_max"][0] == 0.0


def test_eh_alpha_half_bounded_gradient():
    g = grid(2, 30.0, 0.05)
    p = GraphProfile(g, power_graph(0.5, default_eps(0.5, g))(g.r))
    assert eh_conditions(p).checks["linear"]


def test_eh_alpha_two_fails_at_outer_node():
    g = grid(2, 30.0, 0.05)
    rep = eh_conditions(GraphProfile(g, g.r**2))
    assert not rep.checks["linear"]
    assert rep.extra["upsilon_node"] == g.size - 1
    assert rep.series["upsilon_max"][0] == pytest.approx(math.sqrt(1 + 4 * 30.0**2))


def test_halfspace_examples():
    p = paraboloid()
    down = halfspace_check(p, (0.0, -1.0))
    assert down.contained and down.margin == 1.0 and down.inf_u == 0.0
    assert not halfspace_check(p, (1.0, 0.0)).contained
    tilted = halfspace_check(p, (1 / math.sqrt(2), 1 / math.sqrt(2)))
    assert tilted.contained and tilted.margin == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ValueError):
        halfspace_check(p, (1.0, 1.0))


def test_comparison_identical_and_shifted(paraboloid_run):
    rep = comparison_check(paraboloid_run, paraboloid_run)
    assert np.all(rep.series["max_u1_minus_u2"] == 0)
    upper = evolve(GraphProfile(paraboloid_run.grid, paraboloid_run.samples[0].profile.u + 1.0), SolverConfig(t_end=0.5, sample_stride=50))
    rep = comparison_check(paraboloid_run, upper)
    assert rep.checks["ordering_preserved"] and rep.extra["margin"] >= 1 - 1e-3


def test_comparison_rejects_mismatch(paraboloid_run, translator_run):
    with pytest.raises(ValueError):
        comparison_check(paraboloid_run, translator_run[1])
