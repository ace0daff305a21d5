import numpy as np
import pytest


def random_spd(rng, n, spread=1.0):
    """Random SPD matrix with log-uniform spectrum and random orientation."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = np.exp(rng.uniform(-spread, spread, size=n))
    A = (q * lam) @ q.T
    return 0.5 * (A + A.T)


def random_symmetric(rng, n, scale=1.0):
    G = rng.normal(scale=scale, size=(n, n))
    return 0.5 * (G + G.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
