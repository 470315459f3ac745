import numpy as np
import pytest

from telesim.dynamics import ArmModel


@pytest.fixture
def model():
    return ArmModel.canonical()


@pytest.fixture
def model_g():
    return ArmModel.canonical(g0=9.81)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
