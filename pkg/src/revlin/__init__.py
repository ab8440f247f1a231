"""Simulation laboratory for linear processes driven by reversible chains.

The package splits into closed-form oracles (coefficients, oracle) and
seeded simulation (innovations, linproc, mc): every Monte Carlo estimate
is judged against an exactly computed target, never against another
simulation.
"""

from .coefficients import (
    SummabilityError,
    TruncationError,
    WeightProfile,
    abs_sum,
    family,
    regvar_diagnostic,
    weight_profile,
)
from .innovations import (
    GaussianChainSpec,
    GroupWalkSpec,
    MHChainSpec,
    SpectralAtoms,
    chain_spec,
    sample_innovations,
    spectral_atoms,
)
from .linproc import PathRequest, PathSample, blocked_weights, partial_sum, path_values
from .mc import (
    ExperimentConfig,
    ExperimentError,
    ExperimentReport,
    ks_statistic,
    run_experiment,
    set_threads,
)
from .oracle import (
    ConditionError,
    ConditionReport,
    LimitTargets,
    blocked_cov_sum,
    check_conditions,
    cov_sum_f0,
    covariance_model,
    fbm_cov,
    gamma_j,
    group_2pi_h0,
    limit_targets,
    mh_sigma2,
    mh_sigma2_alt,
    quadratic_form_variance,
    variance_probe,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionError",
    "ConditionReport",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentReport",
    "GaussianChainSpec",
    "GroupWalkSpec",
    "LimitTargets",
    "MHChainSpec",
    "PathRequest",
    "PathSample",
    "SpectralAtoms",
    "SummabilityError",
    "TruncationError",
    "WeightProfile",
    "abs_sum",
    "blocked_cov_sum",
    "blocked_weights",
    "chain_spec",
    "check_conditions",
    "cov_sum_f0",
    "covariance_model",
    "family",
    "fbm_cov",
    "gamma_j",
    "group_2pi_h0",
    "ks_statistic",
    "limit_targets",
    "mh_sigma2",
    "mh_sigma2_alt",
    "partial_sum",
    "path_values",
    "quadratic_form_variance",
    "regvar_diagnostic",
    "run_experiment",
    "sample_innovations",
    "set_threads",
    "spectral_atoms",
    "variance_probe",
    "weight_profile",
]
