import numpy as np
import pytest

from ricciflowlab.flow import FlowConfig, evolve_ricci_flow
from ricciflowlab.geometry import ConformalTorus2D, MetricSnapshot, RoundSphere


@pytest.fixture(scope="session")
def sphere2():
    return RoundSphere(2, 1.0, 32)


@pytest.fixture(scope="session")
def sphere3():
    return RoundSphere(3, 1.0, 24)


@pytest.fixture(scope="session")
def sphere2_flow(sphere2):
    return evolve_ricci_flow(MetricSnapshot(sphere2, 0.0), FlowConfig(0.2, 2e-3, "exact_sphere"))


@pytest.fixture(scope="session")
def sphere2_static(sphere2):
    return evolve_ricci_flow(MetricSnapshot(sphere2, 0.0), FlowConfig(0.1, 2e-3, "static"))


@pytest.fixture(scope="session")
def flat_torus32():
    return ConformalTorus2D(32, 1.0, np.zeros((32, 32)))


@pytest.fixture(scope="session")
def flat_static32(flat_torus32):
    return evolve_ricci_flow(MetricSnapshot(flat_torus32, 0.0), FlowConfig(0.01, 1e-4, "static"))


def bumpy_torus(n=32, period=1.0, eps=0.05):
    grid = ConformalTorus2D(n, period, np.zeros((n, n))).grid
    phi = eps * (np.cos(2 * np.pi * grid.x / period) + np.sin(2 * np.pi * grid.y / period))
    return ConformalTorus2D(n, period, phi)


@pytest.fixture(scope="session")
def bumpy32():
    return bumpy_torus(32)
