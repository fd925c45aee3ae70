import numpy as np
import pytest

from mcflab.geometry import GraphProfile, RadialGrid
from mcflab.solitons import translator_profile
from mcflab.solver import SolverConfig, evolve


def grid(n=2, r_max=5.0, h=0.05):
    return RadialGrid.uniform(n, r_max, h)


def paraboloid(n=2, r_max=5.0, h=0.05, t=0.0):
    g = grid(n, r_max, h)
    return GraphProfile(g, g.r**2, t)


@pytest.fixture(scope="session")
def translator_run():
    """g_1 on [0, 20], h = 0.05, evolved to t = 1."""
    sol = translator_profile(1.0, 2, 20.0, 0.05)
    return sol, evolve(sol.profile, SolverConfig(t_end=1.0, sample_stride=100))


@pytest.fixture(scope="session")
def paraboloid_run():
    """u = r^2 on [0, 10], h = 0.05, evolved to t = 0.5."""
    return evolve(paraboloid(r_max=10.0), SolverConfig(t_end=0.5, sample_stride=50))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
