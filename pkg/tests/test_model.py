import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bloomsim import (
    ConfigError,
    KernelSpec,
    ModelParams,
    SpatialGrid,
    convolve,
    drift_term,
    eval_kernel,
    l2_norm,
    sup_norm,
)
from bloomsim.model import _fd_derivative


def test_grid_midpoints():
    grid = SpatialGrid(L=2.0, N=8)
    assert grid.dx == pytest.approx(0.25)
    assert grid.x[0] == pytest.approx(0.125)
    assert np.allclose(np.diff(grid.x), grid.dx)
    assert grid.x[-1] == pytest.approx(2.0 - 0.125)


def test_grid_validation_collects_all_problems():
    with pytest.raises(ConfigError) as exc:
        SpatialGrid(L=-1.0, N=1)
    assert len(exc.value.problems) == 2


def test_grid_matches_rejects_wrong_length():
    grid = SpatialGrid(L=1.0, N=16)
    with pytest.raises(ConfigError):
        grid.matches(np.zeros(17))


def test_kernel_pointwise_value():
    # (|0.5| - 1.0) * (|0.5| - 0.1) = (-0.5) * 0.4 = -0.2
    assert eval_kernel(0.5, 0.1, 1.0) == pytest.approx(-0.2)
    assert eval_kernel(-0.5, 0.1, 1.0) == pytest.approx(-0.2)


def test_kernel_vanishes_outside_annulus():
    assert eval_kernel(0.04, 0.05, 0.25) == 0.0
    assert eval_kernel(0.26, 0.05, 0.25) == 0.0
    assert eval_kernel(0.05, 0.05, 0.25) == 0.0
    assert eval_kernel(0.25, 0.05, 0.25) == 0.0


def test_kernel_sup_value():
    # extremum at the annulus midpoint: ((r1-r0)/2)^2 = 0.01
    kern = KernelSpec(SpatialGrid(1.0, 64), r0=0.05, r1=0.25)
    assert kern.sup_value == pytest.approx(0.01)
    xs = np.linspace(-0.3, 0.3, 20001)
    assert np.max(np.abs(eval_kernel(xs, 0.05, 0.25))) == pytest.approx(0.01, rel=1e-6)


@given(x=st.floats(-2.0, 2.0, allow_nan=False))
def test_kernel_even(x):
    assert eval_kernel(x, 0.05, 0.25) == eval_kernel(-x, 0.05, 0.25)


def test_kernel_radii_validation():
    with pytest.raises(ConfigError, match="r0 < r1"):
        KernelSpec(SpatialGrid(1.0, 16), r0=0.3, r1=0.2)
    with pytest.raises(ConfigError):
        KernelSpec(SpatialGrid(1.0, 16), r0=0.0, r1=0.2)


def test_kernel_matrix_entries_and_symmetry(small_grid, small_kernel):
    i, j = 5, 20
    want = eval_kernel(small_grid.x[i] - small_grid.x[j], 0.05, 0.25) * small_grid.dx
    assert small_kernel.matrix[i, j] == pytest.approx(want)
    assert np.allclose(small_kernel.matrix, small_kernel.matrix.T)


def test_convolve_constant_field_interior(desk_grid, desk_kernel):
    # int G = 2 * int_{r0}^{r1} (x-r1)(x-r0) dx = -(r1-r0)^3 / 3 = -0.008/3
    c = 3.0
    conv = convolve(desk_kernel, np.full(desk_grid.N, c))
    interior = (desk_grid.x > 0.25) & (desk_grid.x < 0.75)
    assert np.allclose(conv[interior], -c * 0.2**3 / 3.0, rtol=1e-3)


@settings(max_examples=25)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_convolve_linear(small_grid, small_kernel, a, b):
    rng = np.random.default_rng(7)
    u = rng.standard_normal(small_grid.N)
    v = rng.standard_normal(small_grid.N)
    lhs = convolve(small_kernel, a * u + b * v)
    rhs = a * convolve(small_kernel, u) + b * convolve(small_kernel, v)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_fd_derivative_exact_for_quadratic():
    x = np.linspace(0.0, 1.0, 41)
    d = _fd_derivative(3.0 * x**2 - x + 2.0, x[1] - x[0])
    assert np.allclose(d, 6.0 * x - 1.0, atol=1e-10)


def test_drift_term_zero_deep_interior(desk_grid, desk_kernel):
    # constant u: u * (G*u) is flat away from the walls, so the flux
    # divergence vanishes there
    d = drift_term(desk_kernel, np.ones(desk_grid.N))
    interior = (desk_grid.x > 0.3) & (desk_grid.x < 0.7)
    assert np.max(np.abs(d[interior])) < 1e-10


def test_norms():
    grid = SpatialGrid(L=4.0, N=32)
    assert l2_norm(grid, np.ones(32)) == pytest.approx(2.0)
    assert sup_norm(np.array([-3.0, 2.0])) == 3.0


def test_model_params_validation():
    with pytest.raises(ConfigError) as exc:
        ModelParams(D=0.0, lam=-1.0, r0=0.1, r1=0.05)
    assert len(exc.value.problems) >= 3
