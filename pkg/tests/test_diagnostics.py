import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bloomsim import (
    ApproxCoefficient,
    ConfigError,
    NoiseSpec,
    SolverConfig,
    check_condition_T,
    from_spectral,
    hs_lipschitz_check,
    holder_scaling_check,
    simulate,
    verify_smoothing,
)
from bloomsim.diagnostics import (
    HolderSpec,
    convergence_in_n,
    estimate_conv_bounds,
    estimate_lemma_constants,
    grr_bound_check,
    grr_functional,
    holder_norm_estimate,
    holder_tail_report,
    qv_check,
    reevaluate,
    sample_trial_field,
)


def test_holder_spec_validation():
    with pytest.raises(ConfigError):
        HolderSpec(gamma=0.0, delta_bar=0.1)
    with pytest.raises(ConfigError):
        HolderSpec(gamma=1.0, delta_bar=1.5)
    assert not HolderSpec(gamma=0.5, delta_bar=0.2).grr_integrable
    assert HolderSpec(gamma=1.2, delta_bar=0.2).grr_integrable


def test_grr_functional_linear_path():
    # f(t) = t with gamma = 1/2: the integrand is |t-s|, whose double
    # integral over the unit square is 1/3
    spec = HolderSpec(gamma=0.5, delta_bar=0.2)
    ts = np.linspace(0.0, 1.0, 401)
    assert grr_functional(ts, ts.copy(), spec) == pytest.approx(1.0 / 3.0, rel=1e-4)


def test_grr_functional_validation():
    spec = HolderSpec(gamma=0.5, delta_bar=0.2)
    with pytest.raises(ConfigError):
        grr_functional([0.0, 1.0], [0.0, 1.0], spec)
    with pytest.raises(ConfigError):
        grr_functional([0.0, 0.5, 0.4], [0.0, 1.0, 2.0], spec)
    with pytest.raises(ConfigError):
        grr_functional([0.0, 0.5, 1.0], [0.0, 1.0], spec)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.1, 10.0), seed=st.integers(0, 100))
def test_grr_functional_symmetries(c, seed):
    # time reversal leaves the increment statistics unchanged; scaling the
    # path scales the functional quadratically
    spec = HolderSpec(gamma=0.8, delta_bar=0.2)
    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, 1.0, 41)
    path = np.cumsum(rng.standard_normal(41))
    base = grr_functional(ts, path, spec)
    assert grr_functional(ts, path[::-1].copy(), spec) == pytest.approx(base, rel=1e-12)
    assert grr_functional(ts, c * path, spec) == pytest.approx(c * c * base, rel=1e-10)


def test_holder_norm_linear_path():
    # sup |f| = 1 and the quotient sup is Delta^{1-delta_bar}, maximized by
    # the full interval: 1 + 1 = 2
    ts = np.linspace(0.0, 1.0, 101)
    assert holder_norm_estimate(ts, ts.copy(), 0.2) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ConfigError):
        holder_norm_estimate([0.0], [1.0], 0.2)


def test_grr_bound_rejects_non_integrable_exponent():
    spec = HolderSpec(gamma=0.5, delta_bar=0.2)
    with pytest.raises(ConfigError):
        grr_bound_check(np.linspace(0, 1, 11), np.zeros(11), spec)


def test_grr_bound_holds_for_trig_paths(rng):
    spec = HolderSpec(gamma=1.2, delta_bar=0.2)
    ts = np.linspace(0.0, 1.0, 201)
    freqs = np.arange(1, 9)
    for _ in range(10):
        amps = rng.standard_normal(8) / freqs
        path = np.sum(amps[:, None] * np.cos(np.outer(freqs, 2 * np.pi * ts)), axis=0)
        rep = grr_bound_check(ts, path, spec, n_pairs=500, rng=rng)
        assert rep.passed
        assert rep.empirical_constant <= 1.0


def test_lemma_constants_stable_under_doubling(desk_basis, desk_kernel):
    m_rep, q_rep = estimate_lemma_constants(desk_basis, desk_kernel, trials=200,
                                            rng=np.random.default_rng(5))
    for rep in (m_rep, q_rep):
        assert rep.passed
        assert np.isfinite(rep.empirical_constant) and rep.empirical_constant > 0
        assert rep.details["doubling_ratio"] <= 1.2
        assert rep.trials == 400


def test_conv_bounds_zero_violations(desk_basis, desk_kernel):
    reports = estimate_conv_bounds(desk_basis, desk_kernel, trials=300,
                                   rng=np.random.default_rng(8))
    names = {r.name for r in reports}
    assert names == {"conv_continuity", "conv_sup_bound", "conv_grad_sup_bound"}
    for rep in reports:
        assert rep.passed
        if rep.bound is not None:
            assert rep.details["normalized_sup"] <= 1.0 + rep.details["slack"]


def test_qv_trivial_for_zero_noise(small_basis):
    traj = simulate(small_basis, None, ApproxCoefficient(lam=0.0, n=4),
                    np.ones(64), NoiseSpec(0),
                    SolverConfig(dt=1e-4, t_end=0.01))
    rep = qv_check(traj)
    assert rep.passed
    assert rep.empirical_constant == 1.0


def test_qv_requires_recording(small_basis):
    traj = simulate(small_basis, None, ApproxCoefficient(lam=1.0, n=4),
                    np.ones(64), NoiseSpec(1),
                    SolverConfig(dt=1e-4, t_end=0.01, record_qv=False))
    with pytest.raises(ConfigError):
        qv_check(traj)


def test_qv_near_one_for_branching_run(small_basis):
    traj = simulate(small_basis, None, ApproxCoefficient(lam=1.0, n=4),
                    np.ones(64), NoiseSpec(9),
                    SolverConfig(dt=1e-4, t_end=0.05))
    rep = qv_check(traj)
    assert rep.passed
    assert rep.empirical_constant == pytest.approx(1.0, abs=0.05)


def test_convergence_in_n_zero_noise_is_degenerate(small_basis, small_kernel):
    out = convergence_in_n(small_basis, small_kernel, 0.0,
                           np.ones(64), NoiseSpec(3),
                           SolverConfig(dt=1e-4, t_end=0.01),
                           n_list=(1, 4, 16))
    assert all(d == 0.0 for d in out["distances"].values())
    assert not out["monotone"]


def test_convergence_in_n_orders_by_index(small_basis, small_kernel, small_grid):
    # low-density bump keeps the trajectories inside the region where the
    # approximations actually differ
    u0 = 0.4 * np.exp(-((small_grid.x - 0.5) ** 2) / (2 * 0.08**2))
    out = convergence_in_n(small_basis, small_kernel, 1.0, u0, NoiseSpec(12),
                           SolverConfig(dt=1e-4, t_end=0.05),
                           n_list=(1, 4, 16, 64))
    d = out["distances"]
    assert d[(1, 4)] > d[(4, 16)] > d[(16, 64)] > 0.0
    assert out["monotone"]


def test_convergence_in_n_requires_increasing_list(small_basis):
    with pytest.raises(ConfigError):
        convergence_in_n(small_basis, None, 1.0, np.ones(64), NoiseSpec(0),
                         SolverConfig(dt=1e-4, t_end=0.001), n_list=(4, 4, 16))


def test_holder_tail_report_markov_margin():
    norms = np.array([0.5, 1.5, 2.5, 3.0, 9.0])
    rep = holder_tail_report(norms)
    assert rep.passed
    assert rep.details["second_moment"] == pytest.approx(np.mean(norms**2))
    assert len(rep.details["margins"]) == 4
    with pytest.raises(ConfigError):
        holder_tail_report([])


def test_reevaluate_round_trips_every_kind(desk_basis, desk_kernel, small_basis):
    rng = np.random.default_rng(3)
    coeff = ApproxCoefficient(lam=1.0, n=4)
    gaps = [2.0**-k for k in range(3, 9)]
    pairs = [(from_spectral(desk_basis, sample_trial_field(desk_basis, rng)),
              from_spectral(desk_basis, sample_trial_field(desk_basis, rng)))
             for _ in range(25)]
    m_rep, q_rep = estimate_lemma_constants(desk_basis, desk_kernel, trials=100, rng=rng)
    traj = simulate(small_basis, None, coeff, np.ones(64), NoiseSpec(9),
                    SolverConfig(dt=1e-4, t_end=0.01))
    ts = np.linspace(0, 1, 101)
    path = np.cumsum(rng.standard_normal(101)) * 0.1
    reports = [
        verify_smoothing(desk_basis, np.logspace(-4, 0, 10), 50, rng=rng),
        holder_scaling_check(desk_basis, 0.4, 0.5, gaps, which="a1"),
        holder_scaling_check(desk_basis, 0.4, 0.5, gaps, which="a2"),
        hs_lipschitz_check(desk_basis, coeff, pairs),
        m_rep,
        q_rep,
        *estimate_conv_bounds(desk_basis, desk_kernel, trials=100, rng=rng),
        check_condition_T({"drift_M": 0.1, "smoothing_C": 0.43, "hs_lipschitz_K": 2.0}, R=2.0),
        qv_check(traj),
        grr_bound_check(ts, path, HolderSpec(gamma=1.2, delta_bar=0.2), n_pairs=200, rng=rng),
        holder_tail_report(np.abs(rng.standard_normal(50)) + 0.2),
    ]
    for rep in reports:
        got = reevaluate(rep, basis=desk_basis, kernel=desk_kernel)
        assert got == pytest.approx(rep.empirical_constant, rel=1e-12), rep.name


def test_reevaluate_rejects_unknown_kind(desk_basis):
    from bloomsim import EstimateReport

    rep = EstimateReport(name="x", empirical_constant=1.0, bound=None, passed=True,
                         trials=1, worst_witness={"kind": "mystery"}, details={})
    with pytest.raises(ConfigError):
        reevaluate(rep, basis=desk_basis)
