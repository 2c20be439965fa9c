import numpy as np
import pytest

from agileradar.model import RadarConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def cfg():
    return RadarConfig()
