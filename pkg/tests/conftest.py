import numpy as np
import pytest

from topo_lidar.core.geometry import ProjectionConfig
from topo_lidar.settings import get_settings


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def small_cfg():
    return ProjectionConfig(height=16, width=64)
