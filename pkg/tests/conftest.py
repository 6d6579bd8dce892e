import numpy as np
import pytest

from bftest import LinearGaussianModel, generate_dataset


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


@pytest.fixture()
def tiny_model():
    """Identity design, y = (1, 2): closed forms are hand-checkable."""
    return LinearGaussianModel(np.eye(2), np.array([1.0, 2.0]), 1.0)


def draw_model(rng, n=25, theta0=(1.0, 1.0), sigma2=1.0) -> LinearGaussianModel:
    """One dataset from the simulation design, for tests that need instances."""
    return generate_dataset(n, theta0, sigma2, rng)
