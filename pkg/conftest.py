import numpy as np
import pytest

from models import Dataset
from synthgen import GeneratorSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def univariate_sample():
    """500 draws from N(0, 1) with the mean range [-5, 5] and sigma range (0, 5]."""
    return generate(GeneratorSpec('univariate', sigma=1.0, per_class=500, seed=11),
                    range_mu=(-5.0, 5.0), range_sigma=5.0).dataset


@pytest.fixture
def two_blobs():
    """60 observations from two well separated 1-D classes."""
    values = np.concatenate([np.random.default_rng(5).normal(-3.0, 0.5, 30),
                             np.random.default_rng(6).normal(3.0, 0.5, 30)])
    return Dataset.from_values(values, range_mu=(-8.0, 8.0), range_sigma=5.0, eps=0.01)


@pytest.fixture
def small_2d():
    """Small two-attribute, two-class sample."""
    return generate(GeneratorSpec('two-gauss-2d', sigma=0.3, per_class=40, seed=3)).dataset
