import numpy as np
import pytest

from qrwalk import build_graph, complete_graph, cycle_graph, torus_graph


@pytest.fixture
def c4():
    """Cycle on 4 vertices, (+1, -1) port order."""
    return cycle_graph(4)


@pytest.fixture
def c4_sorted():
    return build_graph([(0, 1), (1, 2), (2, 3), (3, 0)], ordering="sorted")


@pytest.fixture
def k5():
    return complete_graph(5)


@pytest.fixture
def torus44():
    return torus_graph((4, 4))


@pytest.fixture
def torus1010():
    return torus_graph((10, 10))


@pytest.fixture
def single_edge():
    return build_graph([(0, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
