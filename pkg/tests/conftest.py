import numpy as np
import pytest

from bloomsim import EigenBasis, KernelSpec, SpatialGrid


@pytest.fixture(scope="session")
def desk_grid():
    return SpatialGrid(L=1.0, N=256)


@pytest.fixture(scope="session")
def desk_basis(desk_grid):
    return EigenBasis(desk_grid, D=1.0, J=128)


@pytest.fixture(scope="session")
def desk_kernel(desk_grid):
    return KernelSpec(desk_grid, r0=0.05, r1=0.25)


@pytest.fixture(scope="session")
def small_grid():
    return SpatialGrid(L=1.0, N=64)


@pytest.fixture(scope="session")
def small_basis(small_grid):
    return EigenBasis(small_grid, D=1.0, J=32)


@pytest.fixture(scope="session")
def small_kernel(small_grid):
    return KernelSpec(small_grid, r0=0.05, r1=0.25)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260822)
