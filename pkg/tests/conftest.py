import numpy as np
import pytest

from msdc import CsaParams, ModelGeometry


@pytest.fixture
def geometry():
    """The desk-scale reference geometry: 12x12 input, S=12, Q=24, K=8."""
    return ModelGeometry(12, 12, 12, 24, 8)


@pytest.fixture
def small_geometry():
    """The walkthrough geometry: 3x3 input, S=5, Q=5, K=3."""
    return ModelGeometry(3, 3, 5, 5, 3)


@pytest.fixture
def params():
    return CsaParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
