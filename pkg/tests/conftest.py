import sys

import numpy as np
import pytest

from safebounds import AffineGaussianSystem, HyperRect, UniformGrid, exact_dp

SAFE = HyperRect([-1.0], [1.0])
X0 = HyperRect([-0.25], [0.25])
H = 10


def random_polytope(rng, n):
    """Random interval box with nonempty intersection with the simplex."""
    t = rng.dirichlet(np.ones(n))
    lo = t * rng.uniform(0.0, 1.0, n)
    hi = np.minimum(1.0, t + rng.uniform(0.0, 0.5, n))
    if rng.random() < 0.2:
        k = rng.integers(n)
        lo[k] = hi[k] = t[k]
    return lo, hi


@pytest.fixture(scope="session")
def walk_system():
    return AffineGaussianSystem(A=[[1.0]], sigma=[0.1])


@pytest.fixture(scope="session")
def controlled_system():
    return AffineGaussianSystem(
        A=[[1.0]], Bmat=[[1.0]], c=[0.0], sigma=[0.1], actions=[[-0.2], [0.0], [0.2]]
    )


@pytest.fixture(scope="session")
def grid20():
    return UniformGrid(SAFE, [20])


@pytest.fixture(scope="session")
def grid100():
    return UniformGrid(SAFE, [100])


@pytest.fixture(scope="session")
def oracle_h10(walk_system):
    return exact_dp(walk_system, SAFE, H, mesh_size=4001, mode=0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
