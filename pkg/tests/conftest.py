import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

from tdres import stokes
from tdres.core import ModelParams


@pytest.fixture(scope="session")
def geo_n1_w100():
    return stokes.build_geometry(ModelParams(1, 1.0, -100.0, 100.0))


@pytest.fixture(scope="session")
def geo_n1_w5():
    return stokes.build_geometry(ModelParams(1, 1.0, -5.0, 5.0))


@pytest.fixture(scope="session")
def geo_n3_w5():
    return stokes.build_geometry(ModelParams(3, 1.0, -5.0, 5.0))
