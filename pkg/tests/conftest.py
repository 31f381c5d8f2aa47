import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracmag import FractionalParams, Gaussian, Grid, MagneticPotential, make_field

settings.register_profile(
    "fracmag", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("fracmag")


@pytest.fixture
def half():
    return FractionalParams(0.5, 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return Grid.from_extent(12, 6.0, (0.1, -0.2, 0.05))


def random_field(grid, rng, envelope=1.5):
    from fracmag import Field
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return Field(grid, z * make_field(grid, Gaussian(envelope, grid.center)).values)


def random_linear(rng, scale=1.0):
    return MagneticPotential.linear(scale * rng.standard_normal((3, 3)), scale * rng.standard_normal(3))
