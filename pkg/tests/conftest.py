import numpy as np
import pytest

from hilbtrim import Grid, WeightedSample


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line3():
    """Points {0, 1, 3} on the real line."""
    return WeightedSample.euclidean([[0.0], [1.0], [3.0]])


def weighted_orthonormal(rng, q):
    """Random map U with <Ux, Uy>_q = <x, y>_q, i.e. D^-1/2 O D^1/2."""
    p = q.size
    o, r = np.linalg.qr(rng.standard_normal((p, p)))
    o = o * np.sign(np.diag(r))
    s = np.sqrt(q)
    return (o * s[None, :]) / s[:, None]


def curve_sample(rng, n, m=30, shift=0.0):
    """Smooth random curves on a uniform grid (a few sine modes)."""
    grid = Grid.uniform(m)
    k = np.arange(1, 6)
    basis = np.sqrt(2) * np.sin(np.pi * np.outer(k, grid.knots))
    z = rng.standard_normal((n, k.size)) / k
    return WeightedSample.on_grid(z @ basis + shift, grid)
