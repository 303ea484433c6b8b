import numpy as np
import pytest

from floatwake import discrete_platform, table1_config


@pytest.fixture(scope="session")
def cfg():
    return table1_config()


@pytest.fixture(scope="session")
def disc(cfg):
    return discrete_platform(cfg)


@pytest.fixture(scope="session")
def small_cfg():
    """Short wake buffer for tests where only the mechanics matter."""
    return table1_config(num_rings=10)


@pytest.fixture(scope="session")
def small_disc(small_cfg):
    return discrete_platform(small_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
