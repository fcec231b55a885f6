import numpy as np
import pytest
from hypothesis import strategies as st

from cofx import Edge, VarModel, companion_spectral_radius, load_builtin


def random_stable_model(rng, n, max_lag, density=0.4, scale=0.9):
    """Sparse random VAR, shrunk until its companion radius is below 0.95."""
    edges = []
    for lag in range(1, max_lag + 1):
        for s in range(1, n + 1):
            for t in range(1, n + 1):
                if rng.random() < density:
                    edges.append((s, t, lag, float(rng.uniform(-scale, scale))))
    if not edges:
        edges.append((1, n, 1, 0.5))
    factor = 1.0
    while True:
        model = VarModel(n, max_lag, tuple(Edge(s, t, lag, c * factor) for s, t, lag, c in edges))
        if companion_spectral_radius(model) < 0.95:
            return model
        factor *= 0.8


@st.composite
def stable_models(draw, max_n=3, max_lag=3):
    n = draw(st.integers(2, max_n))
    lag = draw(st.integers(1, max_lag))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_stable_model(np.random.default_rng(seed), n, lag)


@pytest.fixture
def chain():
    return load_builtin("chain")


@pytest.fixture
def proc_a():
    return load_builtin("A")
