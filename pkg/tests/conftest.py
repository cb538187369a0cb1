import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sbpbox.grid import BoxDomain, make_grid

settings.register_profile(
    "suite", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def cube():
    return BoxDomain((1.0, 1.0, 1.0))


@pytest.fixture
def box():
    # deliberately anisotropic so axis mix-ups cannot cancel
    return BoxDomain((1.0, 1.3, 0.7))


@pytest.fixture
def grid8(box):
    return make_grid(box, 8)


@pytest.fixture
def grid16(box):
    return make_grid(box, 16)


@pytest.fixture
def cube8(cube):
    return make_grid(cube, 8)


@pytest.fixture
def cube12(cube):
    return make_grid(cube, 12)
