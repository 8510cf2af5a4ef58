import numpy as np
import pytest

from shallowshell import ForceDensity, Grid, Immersion, Material, make_assembly


@pytest.fixture
def grid9():
    return Grid(1.0, 1.0, 9, 9)


@pytest.fixture
def grid17():
    return Grid(1.0, 1.0, 17, 17)


@pytest.fixture
def material():
    return Material(lam=1.0, mu=1.0, eps=0.1)


@pytest.fixture
def plate():
    return Immersion("plate")


@pytest.fixture
def paraboloid():
    return Immersion("paraboloid", params={"t": 0.1})


@pytest.fixture
def general_force():
    def make(grid):
        return ForceDensity.constant(grid, 0.5, -0.3, 1.0)

    return make


@pytest.fixture
def plate_assembly(grid17, plate, material, general_force):
    return make_assembly(grid17, plate, material, general_force(grid17))


@pytest.fixture
def shell_assembly(grid17, paraboloid, material, general_force):
    return make_assembly(grid17, paraboloid, material, general_force(grid17))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
