"""Single-behavior-policy value estimators.

Three classic point estimators of the target policy's expected reward from
logged ``(action, reward)`` pairs collected under one behavior policy:

* ``BIS`` -- basic importance sampling, the mean of ratio-weighted rewards;
  unbiased, but pays for rarely-logged actions with path variance.
* ``NIS`` -- self-normalized importance sampling, BIS divided by the mean
  importance ratio; slightly biased, usually lower variance.
* ``EA`` -- empirical average, plugs per-action mean rewards into the
  target distribution; ignores the sampled path entirely.

Every estimator can also be written as ``sum_a w(a) * p_test(a) * rhat(a)``
for a per-action weight vector ``w`` (:func:`omega_bis`, :func:`omega_nis`,
``w = 1`` for EA), and :func:`estimate_weighted` evaluates that shared form.
The two routes agree to float precision and are cross-checked in the test
suite.

All reductions use numpy's pairwise summation, so sweeps with millions of
terms do not drift.
"""

from __future__ import annotations

import numpy as np

from .core import LoggedDataset, Policy, empirical_means, path_counts
from .errors import (
    DegenerateDenominator,
    DimensionMismatch,
    UnsupportedAction,
    ZeroNormalizer,
)

#: Estimator names accepted by :func:`estimate`.
SINGLE_ESTIMATORS = ("BIS", "NIS", "EA")


def estimate_weighted(weights: np.ndarray, p_test: Policy, r_hat: np.ndarray) -> float:
    """Evaluate the weighted plug-in form ``sum_a w(a) p_test(a) rhat(a)``."""
    weights = np.asarray(weights, dtype=np.float64)
    r_hat = np.asarray(r_hat, dtype=np.float64)
    if weights.shape != p_test.probs.shape or r_hat.shape != p_test.probs.shape:
        raise DimensionMismatch("weights, policy and empirical means must share one length")
    if not np.all(np.isfinite(weights)):
        raise DimensionMismatch("weights must be finite")
    return float(np.sum(weights * p_test.probs * r_hat))


def _record_ratios(dataset: LoggedDataset, behavior: Policy, p_test: Policy) -> np.ndarray:
    if behavior.n_actions != p_test.n_actions:
        raise DimensionMismatch("behavior and target policies must share one action set")
    counts = path_counts(dataset, behavior.n_actions)
    unsupported = (counts > 0) & (behavior.probs == 0)
    if np.any(unsupported):
        raise UnsupportedAction(
            f"logged actions {np.flatnonzero(unsupported).tolist()} have zero behavior probability"
        )
    return p_test.probs[dataset.actions] / behavior.probs[dataset.actions]


def omega_bis(counts: np.ndarray, n_records: int, behavior: Policy) -> np.ndarray:
    """Importance-sampling weights ``k(a) / (N * pi(a))``.

    Zero-count actions get weight 0 even when the behavior policy puts no
    mass on them; a positive count on a zero-probability action is an
    :class:`UnsupportedAction` error.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != behavior.probs.shape:
        raise DimensionMismatch("counts and policy must have equal length")
    unsupported = (counts > 0) & (behavior.probs == 0)
    if np.any(unsupported):
        raise UnsupportedAction(
            f"sampled actions {np.flatnonzero(unsupported).tolist()} have zero behavior probability"
        )
    denom = n_records * behavior.probs
    return np.divide(counts, denom, out=np.zeros_like(counts), where=counts > 0)


def omega_nis(dataset: LoggedDataset, behavior: Policy, p_test: Policy) -> np.ndarray:
    """Self-normalized weights ``k(a) / (pi(a) * sum_j ratio_j)``.

    The normalizer is the sum of per-record importance ratios.  When every
    logged action has zero target probability the normalizer vanishes and
    the estimator is undefined on this path: that is a
    :class:`ZeroNormalizer` error, never a silent zero.
    """
    ratios = _record_ratios(dataset, behavior, p_test)
    normalizer = float(np.sum(ratios))
    if normalizer <= 0:
        raise ZeroNormalizer("every logged action has zero target probability")
    counts = path_counts(dataset, behavior.n_actions)
    denom = behavior.probs * normalizer
    return np.divide(
        counts.astype(np.float64), denom, out=np.zeros(behavior.n_actions), where=counts > 0
    )


def omega_ea(n_actions: int) -> np.ndarray:
    """Empirical-average weights: constant 1, independent of the path."""
    return np.ones(n_actions)


def estimate_bis(dataset: LoggedDataset, behavior: Policy, p_test: Policy) -> float:
    """Basic importance sampling: mean of ``ratio_i * r_i`` over records."""
    ratios = _record_ratios(dataset, behavior, p_test)
    return float(np.mean(ratios * dataset.rewards))


def estimate_nis(dataset: LoggedDataset, behavior: Policy, p_test: Policy) -> float:
    """Normalized importance sampling: ratio-weighted mean of rewards."""
    ratios = _record_ratios(dataset, behavior, p_test)
    normalizer = float(np.sum(ratios))
    if normalizer <= 0:
        raise ZeroNormalizer("every logged action has zero target probability")
    return float(np.sum(ratios * dataset.rewards) / normalizer)


def estimate_ea(dataset: LoggedDataset, behavior: Policy, p_test: Policy) -> float:
    """Empirical average: plug per-action mean rewards into the target.

    ``behavior`` is accepted for signature parity with the importance
    samplers but plays no role.
    """
    del behavior
    r_hat = empirical_means(dataset, p_test.n_actions)
    return float(np.sum(p_test.probs * r_hat))


_DISPATCH = {"BIS": estimate_bis, "NIS": estimate_nis, "EA": estimate_ea}


def estimate(kind: str, dataset: LoggedDataset, behavior: Policy, p_test: Policy) -> float:
    """Dispatch one of :data:`SINGLE_ESTIMATORS` by name."""
    try:
        fn = _DISPATCH[kind]
    except KeyError:
        raise KeyError(f"unknown estimator {kind!r}, expected one of {SINGLE_ESTIMATORS}") from None
    return fn(dataset, behavior, p_test)


def nis_weight_approx(k_tau: int, n_records: int, pi_tau: float, pi_test_tau: float) -> float:
    """Closed-form approximation of the self-normalized weight of one action.

    ``k / (k * p_test + (1 - p_test) * pi * N)``: a weighted harmonic
    interpolation between the importance-sampling weight ``k / (pi N)``
    (as ``p_test -> 0``) and the empirical-average weight 1 (as
    ``p_test -> 1``).  Accurate when the behavior policy is independent of
    reward quality and N is large.
    """
    denom = k_tau * pi_test_tau + (1.0 - pi_test_tau) * pi_tau * n_records
    if denom <= 0:
        raise DegenerateDenominator("weight approximation denominator must be positive")
    return float(k_tau / denom)
