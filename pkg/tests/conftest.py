import numpy as np
import pytest

from regionalbo.gp import FitConfig, GpHyperparams, fit_map
from regionalbo.problems import Dataset


def make_dataset(dim, n, seed, fn=None):
    rng = np.random.default_rng(seed)
    data = Dataset(dim)
    pts = rng.uniform(0.0, 1.0, size=(n, dim))
    for p in pts:
        value = fn(p) if fn is not None else float(np.sin(4.0 * np.sum(p)) + 0.3 * np.sum(p**2))
        data.append(p, value)
    return data


def make_model(dim=1, n=8, seed=0, lengthscale=0.2, signal=1.0, noise=1e-6, fn=None):
    """Small GP with fixed hyperparameters on random data."""
    data = make_dataset(dim, n, seed, fn)
    hp = GpHyperparams(np.full(dim, lengthscale), signal, noise)
    return fit_map(data, FitConfig(fixed=hp))


@pytest.fixture
def model_1d():
    return make_model(dim=1, n=8, seed=3)
