import numpy as np
import pytest

from equipart.measures import projection_assignment
from equipart.scenarios import gen_gaussian_mixture


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def mixture_specs(d, count, n_points, seed0):
    return [projection_assignment(gen_gaussian_mixture(d, 3, n_points,
                                                       seed=seed0 + j).points)
            for j in range(count)]


@pytest.fixture
def specs_2d():
    return mixture_specs(2, 3, 300, 10)


@pytest.fixture
def specs_3d():
    return mixture_specs(3, 4, 300, 20)
