import numpy as np
import pytest

from jtvsp.graph import Graph, GraphSpectrum, eigendecompose


def random_weights(n, seed=0, density=1.0):
    """Symmetric weights in [0.5, 1.5]; ``density = 1`` gives a complete graph."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 1.5, (n, n))
    keep = rng.random((n, n)) < density
    w = np.triu(w * keep, 1)
    # a path keeps the graph connected
    for i in range(n - 1):
        w[i, i + 1] = max(w[i, i + 1], 0.5)
    return w + w.T


def random_spectrum(n, seed=0, density=1.0) -> GraphSpectrum:
    return GraphSpectrum.from_graph(Graph(random_weights(n, seed, density)))


def ring_weights(n):
    w = np.zeros((n, n))
    for i in range(n):
        w[i, (i + 1) % n] = w[(i + 1) % n, i] = 1.0
    return w


def ring_spectrum(n) -> GraphSpectrum:
    return eigendecompose(np.diag(ring_weights(n).sum(1)) - ring_weights(n))


def symmetric_random_response(rng, n, t):
    """Random real joint response with ``H[:, tau] == H[:, -tau]`` (so real signals stay real)."""
    h = rng.uniform(0.1, 2.0, (n, t))
    return 0.5 * (h + h[:, (-np.arange(t)) % t])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
