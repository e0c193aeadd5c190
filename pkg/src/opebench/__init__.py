"""Off-policy value estimation on finite-action logged data.

A library plus CLI for estimating a target policy's expected reward from
data logged under one or many behavior policies: the classic estimator
family (importance sampling, its self-normalized and capped variants, the
empirical average, the fused and optimally reweighted multi-policy forms),
their closed-form optimal weights and variance decompositions, and a seeded
Monte Carlo benchmark harness with bootstrap confidence reporting.
"""

from . import analysis, bench, core, environments, estimators_multi, estimators_single, oracle_weights
from .core import (
    LoggedDataset,
    Policy,
    RewardModel,
    empirical_means,
    empirical_moments,
    path_counts,
    renormalized_policy,
    rng_stream,
    true_value,
    unsampled_test_mass,
    validate_policy,
)
from .estimators_multi import (
    MULTI_ESTIMATORS,
    CapConfig,
    PolicyFamily,
    cap_ratios,
    estimate_bis_multi,
    estimate_fis,
    estimate_multi,
    estimate_ouis,
    normalize_estimator,
)
from .estimators_single import (
    SINGLE_ESTIMATORS,
    estimate_bis,
    estimate_ea,
    estimate_nis,
    estimate_weighted,
    nis_weight_approx,
    omega_bis,
    omega_ea,
    omega_nis,
)

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "bench",
    "core",
    "environments",
    "estimators_multi",
    "estimators_single",
    "oracle_weights",
    "LoggedDataset",
    "Policy",
    "RewardModel",
    "PolicyFamily",
    "CapConfig",
    "validate_policy",
    "renormalized_policy",
    "path_counts",
    "empirical_means",
    "empirical_moments",
    "true_value",
    "unsampled_test_mass",
    "rng_stream",
    "SINGLE_ESTIMATORS",
    "MULTI_ESTIMATORS",
    "estimate_bis",
    "estimate_nis",
    "estimate_ea",
    "estimate_weighted",
    "omega_bis",
    "omega_nis",
    "omega_ea",
    "nis_weight_approx",
    "estimate_bis_multi",
    "estimate_fis",
    "estimate_ouis",
    "estimate_multi",
    "normalize_estimator",
    "cap_ratios",
    "__version__",
]
