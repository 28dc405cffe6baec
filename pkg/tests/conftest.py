from __future__ import annotations

import numpy as np
import pytest

from ccsat.formats import GraphInstance
from ccsat.solvers import SolverConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def k3() -> GraphInstance:
    return GraphInstance(3, ((1, 2), (1, 3), (2, 3)))


@pytest.fixture
def quick_config() -> SolverConfig:
    return SolverConfig(max_tries=10, max_flips=2_000, noise_p=0.4, seed=7)
