"""Discretized space-time white noise and the branching coefficient.

Cell increments are iid Normal(0, dt/dx), drawn from a counter-based Philox
generator keyed by (seed, stream_id) so that realizations are splittable and
bitwise reproducible regardless of worker scheduling or chunk size.

The square-root branching coefficient sqrt(lambda * max(u, 0)) is replaced
for analysis and simulation by its Lipschitz approximation a_n: zero for
u < 0, linear on [0, 1/n), the exact square root from 1/n on.  With
continuity_fix (default) the linear slope is sqrt(lambda*n), which joins the
branches continuously for every lambda; the historical sqrt(n) slope is kept
selectable and only matches at lambda = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import SpatialGrid
from .reports import EstimateReport
from .spectral import EigenBasis

__all__ = [
    "NoiseSpec",
    "ApproxCoefficient",
    "sample_increment",
    "a_n_eval",
    "a_n_uniform_gap",
    "apply_coefficient",
    "hs_norm_multiplication",
    "hs_lipschitz_check",
    "hs_embedding_check",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Identifies one noise realization: base seed plus stream index."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        problems = []
        if not (0 <= self.seed < 2**64):
            problems.append(f"seed must fit in uint64, got {self.seed}")
        if not (0 <= self.stream_id < 2**64):
            problems.append(f"stream_id must fit in uint64, got {self.stream_id}")
        if problems:
            raise ConfigError(problems)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "NoiseSpec":
        return NoiseSpec(self.seed, self.stream_id + offset)


def sample_increment(spec_or_rng, grid: SpatialGrid, dt: float, size: int | None = None) -> np.ndarray:
    """Draw white-noise increments: N(0, dt/dx) per cell.

    Pass a NoiseSpec for a fresh stream positioned at its start, or an
    already-advanced Generator to continue one.  ``size`` > 1 returns a
    (size, N) block; successive blocks of any size concatenate to the same
    stream (Philox draws are consumed sequentially).
    """
    if dt <= 0:
        raise ValueError(f"time step must be positive, got dt={dt}")
    rng = spec_or_rng.generator() if isinstance(spec_or_rng, NoiseSpec) else spec_or_rng
    scale = math.sqrt(dt / grid.dx)
    if size is None:
        return rng.standard_normal(grid.N) * scale
    return rng.standard_normal((size, grid.N)) * scale


@dataclass(frozen=True)
class ApproxCoefficient:
    """Lipschitz approximation a_n of sqrt(lambda * u_+)."""

    lam: float
    n: int
    continuity_fix: bool = True

    def __post_init__(self):
        problems = []
        if self.lam < 0:
            problems.append(f"branching rate must be >= 0, got lambda={self.lam}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            problems.append(f"approximation index must be an integer >= 1, got n={self.n}")
        if problems:
            raise ConfigError(problems)

    @property
    def slope(self) -> float:
        """Slope of the linear branch on [0, 1/n)."""
        if self.continuity_fix:
            return math.sqrt(self.lam * self.n)
        return math.sqrt(self.n)

    @property
    def lipschitz_constant(self) -> float:
        return self.slope


def a_n_eval(coeff: ApproxCoefficient, u):
    """Evaluate a_n pointwise; scalars or arrays."""
    u = np.asarray(u, dtype=float)
    lin = coeff.slope * u
    sqrt_branch = np.sqrt(coeff.lam * np.maximum(u, 0.0))
    out = np.where(u < 0.0, 0.0, np.where(u < 1.0 / coeff.n, lin, sqrt_branch))
    if out.ndim == 0:
        return float(out)
    return out


def a_n_uniform_gap(coeff: ApproxCoefficient) -> float:
    """sup_u |a_n(u) - sqrt(lambda u_+)| = sqrt(lambda)/(4 sqrt(n)).

    Closed form for the continuity_fix slope; the gap sits at u = 1/(4n).
    """
    if not coeff.continuity_fix:
        raise ConfigError(
            ["uniform gap closed form assumes the continuity_fix slope"]
        )
    return math.sqrt(coeff.lam) / (4.0 * math.sqrt(coeff.n))


def apply_coefficient(coeff: ApproxCoefficient, u: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Multiplication operator: the noise term a_n(u(x)) * xi(x)."""
    u = np.asarray(u, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if u.shape != xi.shape:
        raise ConfigError(
            [f"field and increment shapes differ: {u.shape} vs {xi.shape}"]
        )
    return a_n_eval(coeff, u) * xi


def _hs_sq_of_multiplier(basis: EigenBasis, values: np.ndarray) -> float:
    # sum_k ||values * e_k||^2 with e_k = phi_k / |phi_k|_{D(B)}
    phi = basis.synth  # (N, J), columns are phi_k on the grid
    weights = 1.0 / basis.db_weight**2
    vsq = values * values
    return float(np.sum(weights * (vsq @ (phi * phi))) * basis.grid.dx)


def hs_norm_multiplication(basis: EigenBasis, coeff: ApproxCoefficient, u: np.ndarray) -> float:
    """Hilbert-Schmidt norm of f -> a_n(u) f from the graph-norm space to L2.

    Computed against the D(B)-orthonormalised modes; for constant u >= 1/n it
    reduces to sqrt(lambda u) * ||J||_2 with ||J||_2 the embedding constant.
    """
    basis.grid.matches(u)
    return math.sqrt(_hs_sq_of_multiplier(basis, a_n_eval(coeff, u)))


def hs_lipschitz_check(
    basis: EigenBasis,
    coeff: ApproxCoefficient,
    pairs,
    slack: float = 0.0,
) -> EstimateReport:
    """HS distance of two multipliers against sqrt(lambda n) ||J||_2 times L2 gap."""
    embed = math.sqrt(hs_embedding_sum(basis.grid.L, basis.J - 1))
    bound = coeff.lipschitz_constant * embed
    worst = -np.inf
    witness = {}
    trials = 0
    for u, v in pairs:
        trials += 1
        du = u - v
        dist = math.sqrt(_hs_sq_of_multiplier(basis, a_n_eval(coeff, u) - a_n_eval(coeff, v)))
        gap = math.sqrt(float(np.sum(du * du)) * basis.grid.dx)
        if gap == 0.0:
            continue
        ratio = dist / gap
        if ratio > worst:
            worst = ratio
            witness = {
                "kind": "hs_lipschitz",
                "u": np.asarray(u).tolist(),
                "v": np.asarray(v).tolist(),
                "lam": coeff.lam,
                "n": int(coeff.n),
                "continuity_fix": coeff.continuity_fix,
            }
    return EstimateReport(
        name="hs_lipschitz",
        empirical_constant=float(worst),
        bound=bound,
        passed=worst <= bound * (1.0 + slack),
        trials=trials,
        worst_witness=witness,
        details={"embedding_norm": embed, "lipschitz": coeff.lipschitz_constant},
    )


def hs_embedding_sum(L: float, K: int) -> float:
    """Partial sum S_K = 1 + sum_{k=1..K} 1/(1 + k pi/L)^2."""
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    k = np.arange(1, K + 1)
    return 1.0 + float(np.sum(1.0 / (1.0 + k * np.pi / L) ** 2))


def hs_embedding_check(basis: EigenBasis, K_max: int) -> EstimateReport:
    """Convergence of the embedding series sum_k ||e_k||_X^2.

    Checks the Cauchy tail S_2K - S_K against the bound L^2/(pi^2 K) on a
    doubling ladder and reports a tail-corrected limit estimate.
    """
    if K_max < 4:
        raise ConfigError([f"K_max must be >= 4, got {K_max}"])
    L = basis.grid.L
    ladder = []
    K = max(4, K_max // 16)
    while K * 2 <= K_max:
        s_k = hs_embedding_sum(L, K)
        s_2k = hs_embedding_sum(L, 2 * K)
        ladder.append((K, s_k, s_2k - s_k))
        K *= 2
    cauchy_ok = all(gap <= L**2 / (np.pi**2 * K) for K, _, gap in ladder)
    s_top = hs_embedding_sum(L, K_max)
    # integral tail estimate, accurate to O(K^-3)
    tail = L / (np.pi * (1.0 + (K_max + 0.5) * np.pi / L))
    limit = s_top + tail
    return EstimateReport(
        name="hs_embedding",
        empirical_constant=limit,
        bound=L**2 / (np.pi**2 * K_max),
        passed=cauchy_ok,
        trials=len(ladder),
        worst_witness={"kind": "hs_embedding", "K_max": int(K_max), "L": L},
        details={
            "partial_sum": s_top,
            "tail_estimate": tail,
            "ladder": [(int(K), s, g) for K, s, g in ladder],
        },
    )
