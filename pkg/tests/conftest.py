from __future__ import annotations

import numpy as np
import pytest

from tempim.circuit import CircuitParams, x_polarized

# chaotic point used throughout the benchmarks
G, J, H = 0.685, 0.31, 0.2


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def chaotic():
    return CircuitParams(G, J, H, 3)


@pytest.fixture
def chaotic_x():
    return CircuitParams(G, J, H, 3, x_polarized())
