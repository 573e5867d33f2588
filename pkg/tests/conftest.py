import numpy as np
import pytest

import ttafft


@pytest.fixture(autouse=True)
def random_seed():
    """Reset numpy random seed generator."""
    np.random.seed(0)


@pytest.fixture
def plan64():
    return ttafft.make_plan(64)


@pytest.fixture
def plan128():
    return ttafft.make_plan(128)
