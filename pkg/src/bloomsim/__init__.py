"""Simulator and estimate-verification suite for a stochastic
aggregation-diffusion equation on an interval.

A density on (0, L) diffuses, drifts toward neighboring mass through a
compactly supported interaction kernel, and branches with square-root
multiplicative space-time white noise.  The solver is an exponential Euler
scheme in the reflecting-wall cosine basis; the diagnostics measure the
constants and inequalities the scheme's analysis rests on and verify them
empirically.
"""
from ._version import __version__
from .backend import available_backends, resolve_backend
from .diagnostics import (
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
from .errors import BlowupError, ConfigError
from .io import (
    OutputRecord,
    RunConfig,
    RunManifest,
    parse_config,
    read_snapshot,
    read_timeseries,
    sha256_file,
    write_snapshot,
    write_timeseries,
)
from .model import (
    KernelSpec,
    ModelParams,
    SpatialGrid,
    convolve,
    drift_term,
    eval_kernel,
    l2_norm,
    sup_norm,
)
from .noise import (
    ApproxCoefficient,
    NoiseSpec,
    a_n_eval,
    a_n_uniform_gap,
    apply_coefficient,
    hs_embedding_check,
    hs_embedding_sum,
    hs_lipschitz_check,
    hs_norm_multiplication,
    sample_increment,
)
from .reports import EstimateReport
from .solver import (
    PicardResult,
    SolverConfig,
    Trajectory,
    check_condition_T,
    coarsen_increments,
    condition_T_lhs,
    draw_increments,
    picard_solve,
    simulate,
    step_exponential_euler,
)
from .spectral import (
    EigenBasis,
    apply_B_spectral,
    apply_semigroup,
    db_norm,
    db_norm_coeffs,
    from_spectral,
    holder_integral_a1,
    holder_integral_a2,
    holder_scaling_check,
    smoothing_bound,
    to_spectral,
    verify_smoothing,
)

__all__ = [
    "__version__",
    "available_backends",
    "resolve_backend",
    "HolderSpec",
    "convergence_in_n",
    "estimate_conv_bounds",
    "estimate_lemma_constants",
    "grr_bound_check",
    "grr_functional",
    "holder_norm_estimate",
    "holder_tail_report",
    "qv_check",
    "reevaluate",
    "sample_trial_field",
    "BlowupError",
    "ConfigError",
    "OutputRecord",
    "RunConfig",
    "RunManifest",
    "parse_config",
    "read_snapshot",
    "read_timeseries",
    "sha256_file",
    "write_snapshot",
    "write_timeseries",
    "KernelSpec",
    "ModelParams",
    "SpatialGrid",
    "convolve",
    "drift_term",
    "eval_kernel",
    "l2_norm",
    "sup_norm",
    "ApproxCoefficient",
    "NoiseSpec",
    "a_n_eval",
    "a_n_uniform_gap",
    "apply_coefficient",
    "hs_embedding_check",
    "hs_embedding_sum",
    "hs_lipschitz_check",
    "hs_norm_multiplication",
    "sample_increment",
    "EstimateReport",
    "PicardResult",
    "SolverConfig",
    "Trajectory",
    "check_condition_T",
    "coarsen_increments",
    "condition_T_lhs",
    "draw_increments",
    "picard_solve",
    "simulate",
    "step_exponential_euler",
    "EigenBasis",
    "apply_B_spectral",
    "apply_semigroup",
    "db_norm",
    "db_norm_coeffs",
    "from_spectral",
    "holder_integral_a1",
    "holder_integral_a2",
    "holder_scaling_check",
    "smoothing_bound",
    "to_spectral",
    "verify_smoothing",
]
