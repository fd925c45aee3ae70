import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.geometry import GraphProfile, NumericalFailure, geometry_at, derivatives
from mcflab.solver import (
    SolverConfig,
    choose_dt,
    domain_sensitivity,
    evolve,
    rhs,
    step,
)
from mcflab.solitons import translator_profile

from conftest import grid, paraboloid


@pytest.mark.parametrize(
    "kwargs",
    [dict(cfl_safety=0.0), dict(cfl_safety=1.5), dict(t_end=0.0), dict(max_steps=0), dict(outer_bc="periodic"), dict(sample_stride=0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_rhs_plane_and_axis():
    g = grid()
    assert np.all(rhs(GraphProfile(g, np.full(g.size, 3.0))) == 0)
    assert rhs(paraboloid())[0] == pytest.approx(4.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-1, 1), n=st.integers(2, 5))
def test_rhs_equals_sqrt_q_H(a, b, n):
    g = grid(n, 3.0, 0.05)
    p = GraphProfile(g, a * g.r**2 + b * np.sin(g.r) ** 2)
    du, _ = derivatives(p)
    geo = geometry_at(p)
    lhs = rhs(p)
    assert np.max(np.abs(lhs - np.sqrt(1 + du**2) * geo.H)) <= 1e-10 * max(1.0, np.max(np.abs(geo.H)))


def test_rhs_on_translator_is_speed():
    sol = translator_profile(1.0, 2, 10.0, 0.05)
    v = rhs(sol.profile)
    assert np.max(np.abs(v[: int(0.9 * v.size)] - 1.0)) < 5e-3


def test_dt_rule():
    cfg = SolverConfig()
    assert choose_dt(paraboloid(h=0.05).grid, 8.0, cfg) == pytest.approx(5e-4)
    # max|A|^2 dt must stay <= 0.1
    assert choose_dt(paraboloid(h=0.05).grid, 1000.0, cfg) == pytest.approx(5e-4 / 8)


def test_step_plane_unchanged():
    g = grid()
    p = GraphProfile(g, np.full(g.size, 2.0))
    q, dt = step(p, SolverConfig(), dt=0.3)
    assert np.array_equal(q.u, p.u) and q.t == pytest.approx(0.3)


def test_translator_single_step_shift():
    sol = translator_profile(1.0, 2, 10.0, 0.05)
    q, dt = step(sol.profile, SolverConfig())
    inner = slice(0, int(0.9 * q.grid.size))
    assert np.max(np.abs(q.u[inner] - sol.u[inner] - dt)) < 5e-3 * dt


def test_step_nonfinite_reports_node():
    g = grid()
    u = np.zeros(g.size)
    u[20] = 1.0
    with pytest.raises(NumericalFailure) as exc:
        step(GraphProfile(g, u), SolverConfig(), dt=1e300)
    assert exc.value.node is not None


def test_evolve_plane():
    g = grid()
    traj = evolve(GraphProfile(g, np.zeros(g.size)), SolverConfig(t_end=1.0, sample_stride=500))
    assert traj.termination == "reached_t_end"
    assert traj.times[-1] == pytest.approx(1.0)
    assert np.all(traj.heights() == 0)
    assert np.all(np.diff(traj.times) > 0)


def test_evolve_step_cap_and_blowup():
    traj = evolve(paraboloid(), SolverConfig(t_end=1.0, max_steps=7, sample_stride=3))
    assert traj.termination == "step_cap" and len(traj.stats.dt) == 7
    assert traj.times[-1] == pytest.approx(sum(traj.stats.dt))
    g = grid(2, 2.0, 0.1)
    spike = GraphProfile(g, 200.0 * g.r**2)
    assert evolve(spike, SolverConfig(t_end=1.0)).termination == "blowup_unresolved"


def test_frozen_boundary_holds_outer_node():
    traj = evolve(paraboloid(), SolverConfig(t_end=0.1, outer_bc="frozen", sample_stride=50))
    assert traj.heights()[-1, -1] == traj.heights()[0, -1]


def test_translator_steadiness(translator_run):
    sol, traj = translator_run
    err = np.max(np.abs(traj.samples[-1].profile.u - (sol.u + 1.0)))
    assert err <= 5e-3


def test_convexity_preserved(paraboloid_run):
    for s in paraboloid_run.samples:
        du, d2u = derivatives(s.profile)
        assert du.min() >= -1e-8 and d2u.min() >= -1e-6


def test_comparison_principle_shifted_paraboloid(paraboloid_run):
    upper = evolve(GraphProfile(paraboloid_run.grid, paraboloid_run.samples[0].profile.u + 1.0), SolverConfig(t_end=0.5, sample_stride=50))
    gap = upper.heights() - paraboloid_run.heights()
    assert np.allclose(gap, 1.0, atol=1e-12)


def test_domain_sensitivity_plane_and_paraboloid():
    plane = domain_sensitivity(SolverConfig(t_end=0.2), lambda r: np.zeros_like(r), 2, 5.0, 0.05)
    assert plane.discrepancy == 0.0
    rep = domain_sensitivity(SolverConfig(t_end=0.5, sample_stride=100), lambda r: r**2, 2, 10.0, 0.05)
    assert rep.discrepancy < 1e-3 and rep.window == pytest.approx(0.5)


def test_domain_sensitivity_cubic_decreases():
    cfg = SolverConfig(t_end=0.2, sample_stride=100)
    reps = [domain_sensitivity(cfg, lambda r: r**3, 2, R, 0.05) for R in (2.0, 4.0)]
    assert all(np.isfinite(r.discrepancy) for r in reps)
    assert reps[1].discrepancy < reps[0].discrepancy


def test_evolve_is_deterministic():
    a = evolve(paraboloid(), SolverConfig(t_end=0.05, sample_stride=10))
    b = evolve(paraboloid(), SolverConfig(t_end=0.05, sample_stride=10))
    assert np.array_equal(a.heights(), b.heights())
