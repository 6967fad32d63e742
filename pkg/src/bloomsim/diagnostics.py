"""Estimate-verification suites and path-regularity statistics.

Every suite draws reproducible random trial fields, measures a sup or ratio,
and returns an EstimateReport whose worst_witness carries the input that
achieved it, so the number can be recomputed later (see reevaluate).  The
transport estimates have no analytic reference constants; their acceptance
rule is stability of the empirical sup when the trial count doubles.  The
convolution sup bounds do have exact constants and are checked with a small
quadrature slack.

Path machinery: the discrete squared-increment double integral, the induced
pointwise increment bound (integrable only for exponent > 1), the Hölder
norm of a sampled path, the quadratic-variation comparison, and the
common-noise coupling study across approximation indices n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import KernelSpec, _fd_derivative, convolve, drift_term, l2_norm, sup_norm
from .noise import ApproxCoefficient, NoiseSpec, a_n_eval
from .reports import EstimateReport
from .solver import SolverConfig, Trajectory, condition_T_lhs, draw_increments, simulate
from .spectral import (
    EigenBasis,
    db_norm,
    from_spectral,
    holder_integral_a1,
    holder_integral_a2,
)
from . import noise as _noise

__all__ = [
    "HolderSpec",
    "sample_trial_field",
    "estimate_lemma_constants",
    "estimate_conv_bounds",
    "grr_functional",
    "grr_bound_check",
    "holder_norm_estimate",
    "holder_tail_report",
    "qv_check",
    "convergence_in_n",
    "reevaluate",
]


@dataclass(frozen=True)
class HolderSpec:
    """Exponent triple for the path-regularity machinery.

    gamma drives the double-integral weight |t-t'|^gamma, delta_bar the
    Hölder norm, eta the semigroup increment integrals.  The pointwise
    increment bound derived from the double integral only converges for
    gamma > 1; grr_integrable records that.
    """

    gamma: float
    delta_bar: float
    eta: float = 0.4

    def __post_init__(self):
        problems = []
        if not (self.gamma > 0):
            problems.append(f"gamma must be positive, got {self.gamma}")
        if not (0 < self.delta_bar < self.gamma):
            problems.append(
                f"delta_bar must lie in (0, gamma), got delta_bar={self.delta_bar}, gamma={self.gamma}"
            )
        if not (0 <= self.eta <= 0.5):
            problems.append(f"eta must lie in [0, 1/2], got {self.eta}")
        if problems:
            raise ConfigError(problems)

    @property
    def grr_integrable(self) -> bool:
        return self.gamma > 1


def sample_trial_field(basis: EigenBasis, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Random band-limited coefficients: c_0 ~ N(0,1), c_j ~ N(0, j^-2.5).

    The variance decay guarantees finite graph norm as J grows; every
    randomized suite in this module draws from this ensemble.
    """
    j = np.arange(basis.J)
    std = np.concatenate(([1.0], np.power(j[1:].astype(float), -1.25)))
    if size is None:
        return rng.normal(size=basis.J) * std
    return rng.normal(size=(size, basis.J)) * std


def _scaled_ball_sample(basis: EigenBasis, rng: np.random.Generator, R: float):
    """Field with graph norm exactly rho * R, rho ~ U(0.1, 1]."""
    from .spectral import db_norm_coeffs

    c = sample_trial_field(basis, rng)
    target = R * rng.uniform(0.1, 1.0)
    c *= target / db_norm_coeffs(basis, c)
    return from_spectral(basis, c)


def estimate_lemma_constants(
    basis: EigenBasis,
    kernel: KernelSpec,
    trials: int,
    R: float = 2.0,
    rng: np.random.Generator | None = None,
    stability_limit: float = 1.2,
) -> tuple[EstimateReport, EstimateReport]:
    """Empirical transport constants M (bilinear) and Q (quadratic).

    M: sup of ||F(u) - F(v)|| / (max(|u|, |v|) |u - v|) with F the transport
    term, graph norms in the denominator, over pairs in the radius-R ball.
    Q: sup of ||F(u)|| / (|u| ||u||).  Both are reported from 2x trials and
    must be stable against the first-half estimate (ratio <= stability_limit)
    to pass; there is no analytic reference value.
    """
    if trials < 100:
        raise ConfigError([f"need at least 100 trials, got {trials}"])
    if rng is None:
        rng = np.random.default_rng(1234)
    grid = basis.grid
    m_ratios = np.empty(2 * trials)
    q_ratios = np.empty(2 * trials)
    m_wit: dict = {}
    q_wit: dict = {}
    m_best = -np.inf
    q_best = -np.inf
    for k in range(2 * trials):
        u = _scaled_ball_sample(basis, rng, R)
        v = _scaled_ball_sample(basis, rng, R)
        du, dv, dd = db_norm(basis, u), db_norm(basis, v), db_norm(basis, u - v)
        fu = drift_term(kernel, u)
        fv = drift_term(kernel, v)
        m_ratios[k] = l2_norm(grid, fu - fv) / (max(du, dv) * dd) if dd > 0 else 0.0
        q_ratios[k] = l2_norm(grid, fu) / (du * l2_norm(grid, u))
        if m_ratios[k] > m_best:
            m_best = m_ratios[k]
            m_wit = {"kind": "lemma_M", "u": u.tolist(), "v": v.tolist()}
        if q_ratios[k] > q_best:
            q_best = q_ratios[k]
            q_wit = {"kind": "lemma_Q", "u": u.tolist()}

    def _report(name, ratios, wit):
        half = float(np.max(ratios[:trials]))
        full = float(np.max(ratios))
        ratio = full / half if half > 0 else math.inf
        return EstimateReport(
            name=name,
            empirical_constant=full,
            bound=None,
            passed=bool(np.isfinite(full) and ratio <= stability_limit),
            trials=2 * trials,
            worst_witness=wit,
            details={"half_estimate": half, "doubling_ratio": ratio, "radius": R},
        )

    return (
        _report("transport_bilinear_M", m_ratios, m_wit),
        _report("transport_quadratic_Q", q_ratios, q_wit),
    )


def estimate_conv_bounds(
    basis: EigenBasis,
    kernel: KernelSpec,
    trials: int,
    rng: np.random.Generator | None = None,
    slack: float = 0.01,
) -> list[EstimateReport]:
    """Convolution-field bounds over random graph-norm trial fields.

    Three reports: the empirical continuity constant |G*u|_{D(B)}/|u|_{D(B)}
    (derivative part by finite differences, no analytic bound); the sup bound
    sup|G*u| <= sqrt(L) |G|_inf ||u||; and the derivative sup bound
    sup|(G*u)'| <= sqrt(L) |G|_inf |u|_{D(B)}.  The last two are exact
    inequalities, checked with ``slack`` headroom for the quadrature.
    """
    if rng is None:
        rng = np.random.default_rng(4321)
    grid = basis.grid
    analytic = math.sqrt(grid.L) * kernel.sup_value
    names = ("conv_continuity", "conv_sup_bound", "conv_grad_sup_bound")
    best = {n: -np.inf for n in names}
    wits = {n: {} for n in names}
    for _ in range(trials):
        u = from_spectral(basis, sample_trial_field(basis, rng))
        g = convolve(kernel, u)
        dg = _fd_derivative(g, grid.dx)
        udb = db_norm(basis, u)
        vals = {
            "conv_continuity": (l2_norm(grid, dg) + l2_norm(grid, g)) / udb,
            "conv_sup_bound": sup_norm(g) / (analytic * l2_norm(grid, u)),
            "conv_grad_sup_bound": sup_norm(dg) / (analytic * udb),
        }
        for n in names:
            if vals[n] > best[n]:
                best[n] = vals[n]
                wits[n] = {"kind": n, "u": u.tolist()}
    reports = [
        EstimateReport(
            name="conv_continuity",
            empirical_constant=float(best["conv_continuity"]),
            bound=None,
            passed=bool(np.isfinite(best["conv_continuity"])),
            trials=trials,
            worst_witness=wits["conv_continuity"],
            details={},
        )
    ]
    for n in names[1:]:
        reports.append(
            EstimateReport(
                name=n,
                empirical_constant=float(best[n] * analytic),
                bound=analytic,
                passed=bool(best[n] <= 1.0 + slack),
                trials=trials,
                worst_witness=wits[n],
                details={"slack": slack, "normalized_sup": float(best[n])},
            )
        )
    return reports


def _norm_or_abs(norm):
    return (lambda d: abs(float(d))) if norm is None else norm


def grr_functional(times, values, spec: HolderSpec, norm=None) -> float:
    """Discrete squared-increment double integral of a sampled path.

    Trapezoid weights in both time variables, diagonal pairs (closer than
    one sample spacing) excluded where the integrand degenerates to 0/0.
    ``values`` may be scalars (absolute-value increments) or arrays with a
    ``norm`` callable applied to differences.
    """
    times = np.asarray(times, dtype=float)
    K = times.size
    if K < 3:
        raise ConfigError([f"need at least 3 time points, got {K}"])
    nrm = _norm_or_abs(norm)
    vals = np.asarray(values, dtype=float)
    if vals.shape[0] != K:
        raise ConfigError(
            [f"value count {vals.shape[0]} does not match {K} time points"]
        )
    w = np.diff(times)
    if np.any(w <= 0):
        raise ConfigError(["times must be strictly increasing"])
    tw = np.empty(K)
    tw[0] = w[0] / 2
    tw[-1] = w[-1] / 2
    tw[1:-1] = (w[:-1] + w[1:]) / 2
    dt_min = float(np.min(w))
    total = 0.0
    for i in range(K):
        for j in range(i + 1, K):
            gap = times[j] - times[i]
            if gap < dt_min:
                continue
            q = nrm(vals[j] - vals[i]) / gap**spec.gamma
            total += 2.0 * tw[i] * tw[j] * q * q
    return total


def grr_bound_check(
    times,
    values,
    spec: HolderSpec,
    n_pairs: int = 1000,
    rng: np.random.Generator | None = None,
    norm=None,
) -> EstimateReport:
    """Pointwise increment bound implied by the double integral.

    With weight exponent gamma > 1 the induced bound is
    |f(x) - f(y)| <= 16 sqrt(B) gamma/(gamma-1) |x - y|^(gamma-1), B the
    double integral of the path itself.  Samples random pairs and reports
    the worst LHS/RHS ratio; gamma <= 1 is rejected (the bound diverges).
    """
    if not spec.grr_integrable:
        raise ConfigError(
            [f"increment bound needs gamma > 1, got gamma={spec.gamma}"]
        )
    if rng is None:
        rng = np.random.default_rng(99)
    times = np.asarray(times, dtype=float)
    vals = np.asarray(values, dtype=float)
    nrm = _norm_or_abs(norm)
    B = grr_functional(times, vals, spec, norm=norm)
    coef = 16.0 * math.sqrt(B) * spec.gamma / (spec.gamma - 1.0)
    K = times.size
    worst = -np.inf
    wit: dict = {}
    for _ in range(n_pairs):
        i, j = rng.integers(0, K, size=2)
        if i == j:
            continue
        gap = abs(times[j] - times[i])
        lhs = nrm(vals[j] - vals[i])
        rhs = coef * gap ** (spec.gamma - 1.0)
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        if ratio > worst:
            worst = ratio
            wit = {
                "kind": "grr_bound",
                "x": float(times[i]),
                "y": float(times[j]),
                "lhs": float(lhs),
                "B": B,
                "gamma": spec.gamma,
            }
    return EstimateReport(
        name="grr_increment_bound",
        empirical_constant=float(worst),
        bound=1.0,
        passed=bool(worst <= 1.0),
        trials=n_pairs,
        worst_witness=wit,
        details={"double_integral": B, "coefficient": coef},
    )


def holder_norm_estimate(times, values, delta_bar: float, norm=None) -> float:
    """Discrete Hölder norm: sup_t |f(t)| + sup_{t != t'} |f(t)-f(t')|/|t-t'|^delta_bar.

    Exhaustive pair scan, so meant for snapshot-cadence paths.  With
    delta_bar = 0 the quotient term is just the largest increment.
    """
    times = np.asarray(times, dtype=float)
    K = times.size
    if K < 2:
        raise ConfigError([f"need at least 2 time points, got {K}"])
    nrm = _norm_or_abs(norm)
    vals = np.asarray(values, dtype=float)
    sup_term = max(nrm(vals[i]) for i in range(K))
    quot = 0.0
    for i in range(K):
        for j in range(i + 1, K):
            q = nrm(vals[j] - vals[i]) / (times[j] - times[i]) ** delta_bar
            if q > quot:
                quot = q
    return sup_term + quot


def holder_tail_report(norms, R_list=(1.0, 2.0, 4.0, 8.0)) -> EstimateReport:
    """Tail statistics of an ensemble of path norms against the 1/R^2 rate.

    c is the ensemble second moment; for each R the report compares the
    empirical tail fraction P[norm > R] with c/R^2.  The worst fraction
    times R^2/c is the reported constant (<= 1 by the Markov inequality on
    the empirical measure, so the content is in c staying moderate and
    stable across ensembles).
    """
    norms = np.asarray(norms, dtype=float)
    if norms.size == 0:
        raise ConfigError(["empty norm ensemble"])
    c = float(np.mean(norms * norms))
    margins = []
    for R in R_list:
        frac = float(np.mean(norms > R))
        margins.append(frac * R * R / c)
    worst = float(np.max(margins))
    return EstimateReport(
        name="holder_norm_tail",
        empirical_constant=worst,
        bound=1.0,
        passed=bool(worst <= 1.0),
        trials=int(norms.size),
        worst_witness={"kind": "holder_tail", "norms": norms.tolist(), "R_list": list(R_list)},
        details={"second_moment": c, "margins": margins},
    )


def qv_check(traj: Trajectory, tol: float = 0.05) -> EstimateReport:
    """Realized vs predicted quadratic variation of one trajectory.

    Integrated over the domain the realized/predicted ratio should sit near
    1 with CLT spread 1/sqrt(steps); cell-wise extremes go to details.  A
    trajectory whose run switched QV recording off is rejected.
    """
    if traj.qv_realized is None or traj.qv_predicted is None:
        raise ConfigError(["trajectory did not record quadratic variation"])
    realized = float(np.sum(traj.qv_realized))
    predicted = float(np.sum(traj.qv_predicted))
    if predicted == 0.0:
        passed = realized == 0.0
        ratio = 1.0 if passed else math.inf
    else:
        ratio = realized / predicted
        passed = abs(ratio - 1.0) <= tol
    mask = traj.qv_predicted > 0
    if np.any(mask):
        cell = traj.qv_realized[mask] / traj.qv_predicted[mask]
        cell_lo, cell_hi = float(cell.min()), float(cell.max())
    else:
        cell_lo = cell_hi = 1.0
    return EstimateReport(
        name="quadratic_variation",
        empirical_constant=ratio,
        bound=tol,
        passed=bool(passed),
        trials=1,
        worst_witness={"kind": "qv", "realized_sum": realized, "predicted_sum": predicted},
        details={"cell_ratio_min": cell_lo, "cell_ratio_max": cell_hi},
    )


def convergence_in_n(
    basis: EigenBasis,
    kernel: KernelSpec | None,
    lam: float,
    u0: np.ndarray,
    noise: NoiseSpec,
    config: SolverConfig,
    n_list=(1, 4, 16, 64),
    continuity_fix: bool = True,
    backend: str | None = None,
) -> dict:
    """Pathwise coupling study: one noise realization, increasing index n.

    Runs the solver once per n with the identical increment block and
    measures d(n, n') = sup over recorded snapshots of the L2 difference.
    Returns consecutive-pair distances and whether they decrease along the
    list; the coefficient gap shrinks like 1/sqrt(n), so under a common
    noise path the distances should too, trend-wise.
    """
    n_list = list(n_list)
    if sorted(n_list) != n_list or len(set(n_list)) != len(n_list):
        raise ConfigError([f"n_list must be strictly increasing, got {n_list}"])
    grid = basis.grid
    incs = draw_increments(noise, grid, config.dt, config.nsteps)
    snaps = {}
    for n in n_list:
        coeff = ApproxCoefficient(lam=lam, n=n, continuity_fix=continuity_fix)
        traj = simulate(basis, kernel, coeff, u0, noise, config, increments=incs, backend=backend)
        snaps[n] = traj.snapshots
    distances = {}
    for lo, hi in zip(n_list[:-1], n_list[1:]):
        diff = snaps[lo] - snaps[hi]
        d = float(np.max(np.sqrt(np.sum(diff * diff, axis=1) * grid.dx)))
        distances[(lo, hi)] = d
    dvals = [distances[(lo, hi)] for lo, hi in zip(n_list[:-1], n_list[1:])]
    monotone = all(a > b for a, b in zip(dvals[:-1], dvals[1:]))
    return {"n_list": n_list, "distances": distances, "monotone": monotone}


def reevaluate(report: EstimateReport, basis: EigenBasis | None = None, kernel: KernelSpec | None = None) -> float:
    """Recompute a report's empirical constant from its worst witness.

    Dispatches on witness["kind"]; suites that need the eigenbasis or the
    kernel get them as arguments.  The return value must agree with
    report.empirical_constant to 1e-12 relative, which is what the tests
    assert for every suite.
    """
    wit = report.worst_witness
    if not wit or "kind" not in wit:
        raise ConfigError([f"report {report.name!r} has no re-evaluable witness"])
    kind = wit["kind"]

    def need_basis():
        if basis is None:
            raise ConfigError([f"witness kind {kind!r} needs the eigenbasis"])
        return basis

    def need_kernel():
        if kernel is None:
            raise ConfigError([f"witness kind {kind!r} needs the kernel"])
        return kernel

    if kind == "smoothing":
        b = need_basis()
        c = np.asarray(wit["coeffs"])
        t = wit["t"]
        csq = c * c
        wsq = b.b_factor**2
        return float(np.sqrt(t * np.sum(np.exp(-2.0 * b.omega_sq * t) * wsq * csq) / np.sum(csq)))
    if kind in ("holder_a1", "holder_a2"):
        b = need_basis()
        fn = holder_integral_a1 if kind == "holder_a1" else holder_integral_a2
        s, eta, wgt = wit["s"], wit["eta"], wit["weighting"]
        hi = fn(b, s, s + wit["gap_hi"], eta, weighting=wgt) / wit["gap_hi"] ** eta
        lo = fn(b, s, s + wit["gap_lo"], eta, weighting=wgt) / wit["gap_lo"] ** eta
        return hi / lo
    if kind == "hs_lipschitz":
        b = need_basis()
        coeff = ApproxCoefficient(wit["lam"], wit["n"], wit["continuity_fix"])
        u = np.asarray(wit["u"])
        v = np.asarray(wit["v"])
        dist = math.sqrt(
            _noise._hs_sq_of_multiplier(b, a_n_eval(coeff, u) - a_n_eval(coeff, v))
        )
        gap = math.sqrt(float(np.sum((u - v) ** 2)) * b.grid.dx)
        return dist / gap
    if kind == "hs_embedding":
        s = _noise.hs_embedding_sum(wit["L"], wit["K_max"])
        return s + wit["L"] / (np.pi * (1.0 + (wit["K_max"] + 0.5) * np.pi / wit["L"]))
    if kind == "lemma_M":
        b, k = need_basis(), need_kernel()
        u = np.asarray(wit["u"])
        v = np.asarray(wit["v"])
        dd = db_norm(b, u - v)
        return l2_norm(b.grid, drift_term(k, u) - drift_term(k, v)) / (
            max(db_norm(b, u), db_norm(b, v)) * dd
        )
    if kind == "lemma_Q":
        b, k = need_basis(), need_kernel()
        u = np.asarray(wit["u"])
        return l2_norm(b.grid, drift_term(k, u)) / (db_norm(b, u) * l2_norm(b.grid, u))
    if kind == "conv_continuity":
        b, k = need_basis(), need_kernel()
        u = np.asarray(wit["u"])
        g = convolve(k, u)
        dg = _fd_derivative(g, b.grid.dx)
        return (l2_norm(b.grid, dg) + l2_norm(b.grid, g)) / db_norm(b, u)
    if kind == "conv_sup_bound":
        b, k = need_basis(), need_kernel()
        u = np.asarray(wit["u"])
        return sup_norm(convolve(k, u)) / l2_norm(b.grid, u)
    if kind == "conv_grad_sup_bound":
        b, k = need_basis(), need_kernel()
        u = np.asarray(wit["u"])
        dg = _fd_derivative(convolve(k, u), b.grid.dx)
        return sup_norm(dg) / db_norm(b, u)
    if kind == "condition_T":
        if wit["T"] is None:
            return math.inf
        return condition_T_lhs(wit["T"], wit["M"], wit["R"], wit["C"], wit["K"], wit["C1"])
    if kind == "qv":
        if wit["predicted_sum"] == 0.0:
            return 1.0 if wit["realized_sum"] == 0.0 else math.inf
        return wit["realized_sum"] / wit["predicted_sum"]
    if kind == "grr_bound":
        gap = abs(wit["y"] - wit["x"])
        coef = 16.0 * math.sqrt(wit["B"]) * wit["gamma"] / (wit["gamma"] - 1.0)
        return wit["lhs"] / (coef * gap ** (wit["gamma"] - 1.0))
    if kind == "holder_tail":
        norms = np.asarray(wit["norms"])
        c = float(np.mean(norms * norms))
        return float(max(np.mean(norms > R) * R * R / c for R in wit["R_list"]))
    raise ConfigError([f"unknown witness kind {kind!r}"])
