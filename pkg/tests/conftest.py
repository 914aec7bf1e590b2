from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from matreg import atlas

settings.register_profile("matreg", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("matreg")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def full2():
    return atlas.full(2)


@pytest.fixture(scope="session")
def full3():
    return atlas.full(3)


@pytest.fixture(scope="session")
def diag3():
    return atlas.diagonal(3)


@pytest.fixture(scope="session")
def corner1():
    return atlas.corner(1)


@pytest.fixture(scope="session")
def corner2():
    return atlas.corner(2)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
