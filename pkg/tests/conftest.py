import numpy as np
import pytest

from qinfluence import kraus_to_chi, random_channel


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def rand_chi(rng, n, rank=None):
    return kraus_to_chi(random_channel(n, rank=rank, rng=rng))
