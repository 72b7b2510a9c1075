import numpy as np
import pytest

from qregret import qubit_model


@pytest.fixture(scope="session")
def qubit():
    return qubit_model()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
