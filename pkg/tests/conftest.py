import numpy as np
import pytest

from jfp.precision import cached_context


@pytest.fixture(scope="session")
def ctx256():
    return cached_context(256)


@pytest.fixture(scope="session")
def grid():
    return np.linspace(-1, 1, 201)
