import numpy as np
import pytest

from pcphiv.scenarios import baseline_parameters


@pytest.fixture
def baseline():
    return baseline_parameters()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
