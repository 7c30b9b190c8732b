import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from regpoison.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line_dataset():
    """Ten noiseless points on y = 0.8x + 0.1."""
    x = np.linspace(0.0, 1.0, 10).reshape(-1, 1)
    return Dataset(x, 0.8 * x.ravel() + 0.1)


def random_problem(rng, n=50, d=8, noise=0.05):
    X = rng.uniform(size=(n, d))
    w = rng.uniform(-1.0, 1.0, size=d)
    y = X @ w + noise * rng.standard_normal(n)
    return X, y
