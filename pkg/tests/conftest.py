import numpy as np
import pytest

from heavyspin import streams


@pytest.fixture
def rng():
    return streams.stream(20250810, 0)


def make_rng(*ids):
    return streams.stream(20250810, *ids)


def uniform_sphere(n, count, rng):
    g = rng.standard_normal((count, n))
    g *= np.sqrt(n) / np.linalg.norm(g, axis=1, keepdims=True)
    return g
