"""Time integration: exponential Euler driver and the fixed-point iteration.

The state is kept in spectral coordinates between steps so the linear part
is applied exactly (one multiply by exp(-omega^2 dt) per mode per step); the
transport and noise terms are evaluated on the synthesized field and
projected back.  Synthesis/projection are exact inverses on band-limited
fields, so keeping c avoids the round-trip rounding that a field-state
stepper accumulates over many steps.

Stability of the explicit transport term is guarded per step: the advective
velocity (the convolution field) must satisfy |v| dt <= cfl_factor dx.
Violations raise BlowupError with the partial record; negative densities are
never clipped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import get_run_chunk, resolve_backend
from .errors import BlowupError, ConfigError
from .model import KernelSpec, SpatialGrid, _fd_derivative
from .noise import ApproxCoefficient, NoiseSpec, a_n_eval
from .reports import EstimateReport
from .spectral import EigenBasis, db_norm_coeffs, from_spectral, to_spectral

__all__ = [
    "SolverConfig",
    "Trajectory",
    "PicardResult",
    "simulate",
    "step_exponential_euler",
    "draw_increments",
    "coarsen_increments",
    "picard_solve",
    "condition_T_lhs",
    "check_condition_T",
]

_MODES = ("exponential_euler", "deterministic", "picard")


@dataclass(frozen=True)
class SolverConfig:
    """Step size, horizon, recording cadence and integration mode.

    "deterministic" runs the same loop with the noise coefficient forced to
    zero (drift only); "picard" marks a config meant for picard_solve and is
    rejected by simulate().
    """

    dt: float
    t_end: float
    snapshot_every: int = 100
    mode: str = "exponential_euler"
    cfl_factor: float = 0.5
    record_qv: bool = True

    def __post_init__(self):
        problems = []
        if not (self.dt > 0):
            problems.append(f"time step must be positive, got dt={self.dt}")
        if not (self.t_end > 0):
            problems.append(f"horizon must be positive, got t_end={self.t_end}")
        if self.snapshot_every < 1:
            problems.append(
                f"snapshot_every must be a positive step count, got {self.snapshot_every}"
            )
        if self.mode not in _MODES:
            problems.append(f"unknown mode {self.mode!r}; supported: {', '.join(_MODES)}")
        if not (self.cfl_factor > 0):
            problems.append(f"cfl_factor must be positive, got {self.cfl_factor}")
        if self.dt > 0 and self.t_end > 0 and self.dt > self.t_end:
            problems.append(f"dt <= t_end required, got dt={self.dt}, t_end={self.t_end}")
        if problems:
            raise ConfigError(problems)
        if self.dt > 0 and self.t_end > 0:
            n = round(self.t_end / self.dt)
            if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
                raise ConfigError(
                    [f"t_end={self.t_end} is not an integer number of steps of dt={self.dt}"]
                )

    @property
    def nsteps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    """Recorded output of one simulation.

    Scalar series have one row per time point (nsteps + 1).  Snapshots hold
    the full field at the recording steps, together with the stochastic
    convolution (spectral coefficients of the noise-only mild recursion) and
    the running martingale sum at the same instants.  Quadratic variation
    accumulators are totals over the whole run, per cell.
    """

    times: np.ndarray
    mass: np.ndarray
    positivity_fraction: np.ndarray
    db_norm: np.ndarray
    snapshot_steps: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    stoch_conv_coeffs: np.ndarray
    martingale: np.ndarray
    qv_realized: np.ndarray | None
    qv_predicted: np.ndarray | None
    final_coeffs: np.ndarray
    backend: str
    dt: float

    def final_field(self, basis: EigenBasis) -> np.ndarray:
        return from_spectral(basis, self.final_coeffs)


def _snapshot_steps(nsteps: int, every: int) -> list[int]:
    steps = list(range(0, nsteps, every))
    steps.append(nsteps)
    return steps


def draw_increments(spec: NoiseSpec, grid: SpatialGrid, dt: float, nsteps: int) -> np.ndarray:
    """Materialize a full (nsteps, N) block of white-noise increments.

    Identical to what simulate() consumes internally for the same spec
    (chunked draws from one Philox stream concatenate bitwise), so a block
    drawn here can be coarsened and fed back for common-noise studies.
    """
    rng = spec.generator()
    return rng.standard_normal((nsteps, grid.N)) * math.sqrt(dt / grid.dx)


def coarsen_increments(increments: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive groups of rows: the same Brownian path at dt * factor."""
    nsteps, N = increments.shape
    if factor < 1 or nsteps % factor:
        raise ConfigError(
            [f"coarsening factor {factor} does not divide {nsteps} steps"]
        )
    return increments.reshape(nsteps // factor, factor, N).sum(axis=1)


def simulate(
    basis: EigenBasis,
    kernel: KernelSpec | None,
    coeff: ApproxCoefficient,
    u0: np.ndarray,
    noise: NoiseSpec,
    config: SolverConfig,
    increments: np.ndarray | None = None,
    backend: str | None = None,
) -> Trajectory:
    """Run the exponential Euler scheme and record a Trajectory.

    kernel=None drops the transport term (linear equation).  ``increments``
    overrides the noise draw with a precomputed (nsteps, N) block; ``noise``
    is then only bookkeeping.  The initial state is the band-limited
    projection of u0 onto the first J modes.
    """
    grid = basis.grid
    grid.matches(u0)
    u0 = np.asarray(u0, dtype=float)
    if not np.all(np.isfinite(u0)):
        raise ConfigError(["initial field contains non-finite values"])
    if kernel is not None and kernel.grid != grid:
        raise ConfigError(["kernel and basis are built on different grids"])
    if config.mode == "picard":
        raise ConfigError(["mode 'picard' is handled by picard_solve, not simulate"])
    if config.mode == "deterministic":
        coeff = ApproxCoefficient(lam=0.0, n=coeff.n, continuity_fix=True)
    nsteps = config.nsteps
    if increments is not None:
        increments = np.ascontiguousarray(increments, dtype=float)
        if increments.shape != (nsteps, grid.N):
            raise ConfigError(
                [
                    f"increments shape {increments.shape} does not match "
                    f"({nsteps}, {grid.N})"
                ]
            )
    resolved = resolve_backend(backend)
    run_chunk = get_run_chunk(resolved)

    c = to_spectral(basis, u0).copy()
    jc = np.zeros(basis.J)
    mart = np.zeros(grid.N)
    qv_r = np.zeros(grid.N)
    qv_p = np.zeros(grid.N)
    decay = np.exp(-basis.omega_sq * config.dt)
    sqrt_L = math.sqrt(grid.L)
    kmat = None if kernel is None else kernel.matrix
    vmax_limit = config.cfl_factor * grid.dx / config.dt if kernel is not None else math.inf
    scale = math.sqrt(config.dt / grid.dx)
    rng = noise.generator() if increments is None else None

    mass = np.empty(nsteps + 1)
    posfrac = np.empty(nsteps + 1)
    dbser = np.empty(nsteps + 1)
    snap_steps = _snapshot_steps(nsteps, config.snapshot_every)
    snapshots = np.empty((len(snap_steps), grid.N))
    jc_snaps = np.empty((len(snap_steps), basis.J))
    mart_snaps = np.empty((len(snap_steps), grid.N))
    times = np.arange(nsteps + 1) * config.dt

    def record_snapshot(idx):
        snapshots[idx] = from_spectral(basis, c)
        jc_snaps[idx] = jc
        mart_snaps[idx] = mart

    def partial(upto):
        s = [k for k in snap_steps if k < upto]
        return Trajectory(
            times=times[:upto],
            mass=mass[:upto].copy(),
            positivity_fraction=posfrac[:upto].copy(),
            db_norm=dbser[:upto].copy(),
            snapshot_steps=np.array(s, dtype=int),
            snapshot_times=np.array(s, dtype=float) * config.dt,
            snapshots=snapshots[: len(s)].copy(),
            stoch_conv_coeffs=jc_snaps[: len(s)].copy(),
            martingale=mart_snaps[: len(s)].copy(),
            qv_realized=qv_r.copy(),
            qv_predicted=qv_p.copy(),
            final_coeffs=c.copy(),
            backend=resolved,
            dt=config.dt,
        )

    record_snapshot(0)
    for si in range(1, len(snap_steps)):
        lo, hi = snap_steps[si - 1], snap_steps[si]
        m = hi - lo
        if increments is None:
            block = rng.standard_normal((m, grid.N)) * scale
        else:
            block = increments[lo:hi]
        status, bad = run_chunk(
            c, jc, mart, qv_r, qv_p,
            block, basis.synth, basis.proj, kmat, decay, basis.b_factor,
            config.dt, grid.dx, sqrt_L, vmax_limit,
            coeff.lam, 1.0 / coeff.n, coeff.slope,
            mass[lo:hi], posfrac[lo:hi], dbser[lo:hi],
        )
        if status == 1:
            raise BlowupError(
                "advective velocity exceeded the stability limit", lo + bad, partial(lo + bad)
            )
        if status == 2:
            raise BlowupError("field became non-finite", lo + bad, partial(lo + bad))
        record_snapshot(si)

    u_end = from_spectral(basis, c)
    mass[nsteps] = sqrt_L * c[0]
    posfrac[nsteps] = np.count_nonzero(u_end >= 0.0) / grid.N
    dbser[nsteps] = db_norm_coeffs(basis, c)
    if not config.record_qv:
        qv_r = qv_p = None
    return Trajectory(
        times=times,
        mass=mass,
        positivity_fraction=posfrac,
        db_norm=dbser,
        snapshot_steps=np.array(snap_steps, dtype=int),
        snapshot_times=np.array(snap_steps, dtype=float) * config.dt,
        snapshots=snapshots,
        stoch_conv_coeffs=jc_snaps,
        martingale=mart_snaps,
        qv_realized=qv_r,
        qv_predicted=qv_p,
        final_coeffs=c.copy(),
        backend=resolved,
        dt=config.dt,
    )


def step_exponential_euler(
    basis: EigenBasis,
    kernel: KernelSpec | None,
    coeff: ApproxCoefficient,
    c: np.ndarray,
    xi: np.ndarray,
    dt: float,
) -> np.ndarray:
    """One explicit step in spectral coordinates, written out plainly.

    Reference form of the update the chunk kernels apply; tests hold the
    backends against it.
    """
    u = from_spectral(basis, c)
    r = a_n_eval(coeff, u) * xi
    if kernel is not None:
        r = r - dt * _fd_derivative(u * (kernel.matrix @ u), basis.grid.dx)
    decay = np.exp(-basis.omega_sq * dt)
    return decay * (c + basis.proj @ r)


@dataclass
class PicardResult:
    """Fixed-point iteration record: final iterate path plus sweep log.

    ``gaps`` holds h_m = sup over time points of the SQUARED graph norm of
    iterate differences, one entry per sweep; ``ratios`` are the successive
    h_{m+1}/h_m, the contraction diagnostic.
    """

    times: np.ndarray
    coeff_path: np.ndarray
    gaps: list[float] = field(default_factory=list)
    sweeps: int = 0
    converged: bool = False

    def field_path(self, basis: EigenBasis) -> np.ndarray:
        return self.coeff_path @ basis.synth.T

    def ratios(self) -> list[float]:
        return [b / a for a, b in zip(self.gaps[:-1], self.gaps[1:]) if a > 0]


def picard_solve(
    basis: EigenBasis,
    kernel: KernelSpec | None,
    coeff: ApproxCoefficient,
    u0: np.ndarray,
    noise: NoiseSpec,
    config: SolverConfig,
    increments: np.ndarray | None = None,
    max_sweeps: int = 50,
    tol: float = 1e-12,
) -> PicardResult:
    """Iterate the mild-solution map with the noise path frozen.

    Sweep m+1 integrates the scheme with drift and noise coefficients read
    from iterate m at the same step, starting from the constant-in-time
    iterate v0 == u0.  The gap recorded after each sweep is the sup over
    time points of the squared graph norm of the difference; the fixed point
    is the simulate() trajectory for the same increments.  Non-contraction
    shows up as converged=False with the ratios in the result, not as an
    exception.
    """
    if max_sweeps < 2:
        raise ConfigError([f"need at least 2 sweeps, got max_sweeps={max_sweeps}"])
    grid = basis.grid
    grid.matches(u0)
    nsteps = config.nsteps
    if increments is None:
        increments = draw_increments(noise, grid, config.dt, nsteps)
    elif increments.shape != (nsteps, grid.N):
        raise ConfigError(
            [f"increments shape {increments.shape} does not match ({nsteps}, {grid.N})"]
        )
    c0 = to_spectral(basis, np.asarray(u0, dtype=float))
    decay = np.exp(-basis.omega_sq * config.dt)
    prev = np.tile(c0, (nsteps + 1, 1))
    times = np.arange(nsteps + 1) * config.dt
    gaps: list[float] = []
    converged = False
    sweeps = 0
    for _ in range(max_sweeps):
        nxt = np.empty_like(prev)
        nxt[0] = c0
        c = c0
        for k in range(nsteps):
            u = from_spectral(basis, prev[k])
            if not np.all(np.isfinite(u)):
                raise BlowupError("fixed-point iterate became non-finite", k)
            r = a_n_eval(coeff, u) * increments[k]
            if kernel is not None:
                r = r - config.dt * _fd_derivative(u * (kernel.matrix @ u), grid.dx)
            c = decay * (c + basis.proj @ r)
            nxt[k + 1] = c
        sweeps += 1
        gap = max(db_norm_coeffs(basis, d) for d in nxt - prev) ** 2
        gaps.append(gap)
        prev = nxt
        if gap <= tol:
            converged = True
            break
    return PicardResult(times=times, coeff_path=prev, gaps=gaps, sweeps=sweeps, converged=converged)


def condition_T_lhs(T: float, M: float, R: float, C: float, K: float, C1: float = 1.0) -> float:
    """Contraction bound 2 [ M^2 R^2 (T + 2 sqrt(T) C)^2 + C1^2 K^2 T ].

    Below 1/2 the mild-solution map is a contraction on the radius-R ball up
    to horizon T.  M is the bilinear transport constant, C the semigroup
    smoothing constant, K the noise Lipschitz constant, C1 the linear-growth
    constant of the noise coefficient.
    """
    if T < 0:
        raise ValueError(f"horizon must be >= 0, got T={T}")
    return 2.0 * ((M * R) ** 2 * (T + 2.0 * math.sqrt(T) * C) ** 2 + (C1 * K) ** 2 * T)


def check_condition_T(
    estimates: dict,
    R: float,
    T: float | None = None,
    min_exponent: int = 20,
) -> EstimateReport:
    """Evaluate the contraction condition from a dict of measured constants.

    Required keys: "drift_M", "smoothing_C", "hs_lipschitz_K"; optional
    "noise_C1" (default 1).  With T given, reports the left-hand side at
    that horizon; otherwise scans dyadic horizons 1, 1/2, 1/4, ... down to
    2^-min_exponent and reports the largest one that contracts.
    """
    required = ("drift_M", "smoothing_C", "hs_lipschitz_K")
    missing = [k for k in required if k not in estimates]
    if missing:
        raise ConfigError([f"estimate dict is missing key {k!r}" for k in missing])
    if not (R > 0):
        raise ConfigError([f"ball radius must be positive, got R={R}"])
    M = float(estimates["drift_M"])
    C = float(estimates["smoothing_C"])
    K = float(estimates["hs_lipschitz_K"])
    C1 = float(estimates.get("noise_C1", 1.0))
    if T is not None:
        lhs = condition_T_lhs(T, M, R, C, K, C1)
        chosen = T
        scanned = 1
    else:
        chosen = None
        lhs = math.inf
        scanned = 0
        for e in range(min_exponent + 1):
            cand = 2.0**-e
            scanned += 1
            val = condition_T_lhs(cand, M, R, C, K, C1)
            if val < 0.5:
                chosen, lhs = cand, val
                break
    passed = chosen is not None and lhs < 0.5
    witness = {
        "kind": "condition_T",
        "T": chosen,
        "M": M,
        "R": R,
        "C": C,
        "K": K,
        "C1": C1,
    }
    return EstimateReport(
        name="condition_T",
        empirical_constant=float(lhs),
        bound=0.5,
        passed=passed,
        trials=scanned,
        worst_witness=witness,
        details={"T": chosen, "M": M, "R": R, "C": C, "K": K, "C1": C1},
    )
