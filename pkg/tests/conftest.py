import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hbm.body import Discretization, default_discretization

settings.register_profile(
    "hbm", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("hbm")


@pytest.fixture(scope="session")
def disc2():
    return Discretization(2, 128, 32)


@pytest.fixture(scope="session")
def disc3():
    return Discretization(3, 32, 8)


@pytest.fixture(scope="session")
def full2():
    return default_discretization(2)


@pytest.fixture(scope="session")
def full3():
    return default_discretization(3)


@pytest.fixture(params=[2, 3], ids=["n2", "n3"])
def disc(request, disc2, disc3):
    return disc2 if request.param == 2 else disc3


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
