"""Spatial grid, interaction kernel and the nonlinear transport term.

The density u(t, x) lives on a uniform cell-centered grid over (0, L) with
reflecting (zero-flux) walls.  Aggregation enters through the perception
kernel

    G(x) = (|x| - r1)(|x| - r0)   for r0 <= |x| <= r1,   0 otherwise,

an even, non-positive bump supported on an annulus around each cell.  The
drift used by the solver is d/dx [ u * (G conv u) ], with the convolution
taken against the zero extension of u outside the domain.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "SpatialGrid",
    "KernelSpec",
    "ModelParams",
    "eval_kernel",
    "convolve",
    "drift_term",
    "l2_norm",
    "sup_norm",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centered grid on (0, L): x_i = (i + 1/2) dx, dx = L/N."""

    L: float
    N: int

    def __post_init__(self):
        problems = []
        if not (self.L > 0):
            problems.append(f"domain length must be positive, got L={self.L}")
        if self.N < 2:
            problems.append(f"need at least 2 cells, got N={self.N}")
        if problems:
            raise ConfigError(problems)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.dx

    def matches(self, u: np.ndarray) -> None:
        if np.shape(u) != (self.N,):
            raise ConfigError(
                f"field shape {np.shape(u)} does not match grid with N={self.N}"
            )


def eval_kernel(x, r0: float, r1: float):
    """Evaluate G pointwise; accepts scalars or arrays."""
    if not (0 < r0 < r1):
        raise ConfigError([f"kernel radii must satisfy 0 < r0 < r1, got r0={r0}, r1={r1}"])
    a = np.abs(x)
    out = np.where((a >= r0) & (a <= r1), (a - r1) * (a - r0), 0.0)
    if np.isscalar(x):
        return float(out)
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Perception kernel with its precomputed quadrature matrix.

    ``matrix[i, j] = G(x_i - x_j) * dx`` so that ``matrix @ u`` is the
    rectangle-rule convolution against the zero-extended field.
    """

    grid: SpatialGrid
    r0: float
    r1: float
    matrix: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        problems = []
        if not (0 < self.r0 < self.r1):
            problems.append(
                f"kernel radii must satisfy 0 < r0 < r1, got r0={self.r0}, r1={self.r1}"
            )
        if self.r1 > self.grid.L:
            problems.append(
                f"outer radius r1={self.r1} exceeds domain length L={self.grid.L}"
            )
        if problems:
            raise ConfigError(problems)
        if self.matrix is None:
            x = self.grid.x
            m = eval_kernel(x[:, None] - x[None, :], self.r0, self.r1) * self.grid.dx
            object.__setattr__(self, "matrix", m)

    @property
    def sup_value(self) -> float:
        """max |G| = (r1 - r0)^2 / 4, attained at |x| = (r0 + r1)/2."""
        return (self.r1 - self.r0) ** 2 / 4


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: diffusivity, branching rate, kernel radii."""

    D: float = 1.0
    lam: float = 1.0
    r0: float = 0.05
    r1: float = 0.25

    def __post_init__(self):
        problems = []
        if not (self.D > 0):
            problems.append(f"diffusivity must be positive, got D={self.D}")
        if self.lam < 0:
            problems.append(f"branching rate must be >= 0, got lambda={self.lam}")
        if not (0 < self.r0 < self.r1):
            problems.append(
                f"kernel radii must satisfy 0 < r0 < r1, got r0={self.r0}, r1={self.r1}"
            )
        if problems:
            raise ConfigError(problems)


def convolve(kernel: KernelSpec, u: np.ndarray) -> np.ndarray:
    """(G conv u)(x_i) with u extended by zero outside the domain."""
    kernel.grid.matches(u)
    return kernel.matrix @ u


def _fd_derivative(p: np.ndarray, dx: float) -> np.ndarray:
    """Second-order first derivative: central interior, one-sided at walls."""
    d = np.empty_like(p)
    d[1:-1] = (p[2:] - p[:-2]) / (2 * dx)
    d[0] = (-3 * p[0] + 4 * p[1] - p[2]) / (2 * dx)
    d[-1] = (3 * p[-1] - 4 * p[-2] + p[-3]) / (2 * dx)
    return d


def drift_term(kernel: KernelSpec, u: np.ndarray) -> np.ndarray:
    """d/dx [ u * (G conv u) ] by finite differences on the grid."""
    kernel.grid.matches(u)
    return _fd_derivative(u * (kernel.matrix @ u), kernel.grid.dx)


def l2_norm(grid: SpatialGrid, u: np.ndarray) -> float:
    """Grid L2 norm: sqrt(sum u_i^2 dx)."""
    grid.matches(u)
    return float(np.sqrt(np.sum(np.square(u)) * grid.dx))


def sup_norm(u: np.ndarray) -> float:
    return float(np.max(np.abs(u)))
