import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_symmetric(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) * scale
    return (a + a.T) / 2.0


def random_psd(rng, d):
    a = rng.normal(size=(d, d + 2))
    return a @ a.T / (d + 2)
