"""Variance and MSE machinery for the weighted plug-in estimator family.

The estimator ``J_hat = sum_a w(a, path) p_test(a) rhat(a)`` has two
variance sources, split by the law of total variance:

* ``v_int`` -- reward noise surviving the per-action averaging,
  ``E_path[ sum_a w^2 p_test^2 V_r / k_a ]``;
* ``v_path`` -- variability of the conditional mean
  ``sum_a w p_test rbar`` across sampled paths.

:func:`decompose_variance` computes the split exactly (enumerating count
vectors under the multinomial path law) or by Monte Carlo.  For data pooled
from several behavior policies, :func:`analytic_var_bis_multi` and
:func:`analytic_var_fis_multi` give the closed-form variances of the
per-record-ratio and fused estimators; their difference
(:func:`variance_gap`) is non-negative, which reduces to the
reciprocal-sum inequality checked by :func:`harmonic_mean_inequality`.

:func:`adaptive_ea_mean_analytic` covers the one pathology demonstrated
here for adaptive logging: averaging within a stop-at-first-failure episode
of Bernoulli(1/2) rewards has expectation ``1 - ln 2``, an underestimate of
the true mean 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Literal

import numpy as np

from .core import Policy, RewardModel, rng_stream
from .errors import (
    DimensionMismatch,
    InfiniteConditionalVariance,
    NonPositiveEntry,
    UnsupportedAction,
    ZeroFusedMass,
    ZeroNormalizer,
)
from .estimators_multi import PolicyFamily
from .estimators_single import omega_bis

WeightRule = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class VarianceDecomposition:
    """Total estimator variance split into reward noise and path noise."""

    v_int: float
    v_path: float
    total: float

    def __post_init__(self):
        if self.v_int < 0 or self.v_path < 0:
            raise ValueError("variance components must be non-negative")
        if abs(self.total - (self.v_int + self.v_path)) > 1e-10:
            raise ValueError("total must equal v_int + v_path")


@dataclass(frozen=True)
class MseBreakdown:
    """Fixed-path MSE split into squared conditional bias and variance."""

    bias_sq: float
    variance: float
    mse: float

    def __post_init__(self):
        if abs(self.mse - (self.bias_sq + self.variance)) > 1e-10:
            raise ValueError("mse must equal bias_sq + variance")


def bis_weight_rule(behavior: Policy) -> WeightRule:
    """Counts-to-weights rule of basic importance sampling."""

    def rule(counts: np.ndarray) -> np.ndarray:
        return omega_bis(counts, int(np.sum(counts)), behavior)

    return rule


def nis_weight_rule(behavior: Policy, p_test: Policy) -> WeightRule:
    """Counts-to-weights rule of self-normalized importance sampling.

    The record-sum normalizer collapses to a count-weighted sum, so the
    weights are a function of the count vector alone.
    """
    if behavior.n_actions != p_test.n_actions:
        raise DimensionMismatch("behavior and target policies must share one action set")

    def rule(counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=np.float64)
        ratios = np.divide(
            p_test.probs, behavior.probs, out=np.zeros_like(p_test.probs), where=counts > 0
        )
        normalizer = float(np.sum(counts * ratios))
        if normalizer <= 0:
            raise ZeroNormalizer("every sampled action has zero target probability")
        denom = behavior.probs * normalizer
        return np.divide(counts, denom, out=np.zeros_like(counts), where=counts > 0)

    return rule


def ea_weight_rule() -> WeightRule:
    """Constant-1 weights of the empirical average, blind to the path."""

    def rule(counts: np.ndarray) -> np.ndarray:
        return np.ones(np.asarray(counts).size)

    return rule


def _count_vectors(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _count_vectors(total - first, parts - 1):
            yield (first, *rest)


def _log_multinomial(counts: np.ndarray, probs: np.ndarray) -> float:
    """Log pmf of a multinomial count vector; -inf when infeasible."""
    if np.any((probs == 0) & (counts > 0)):
        return -np.inf
    n = int(np.sum(counts))
    log = math.lgamma(n + 1)
    for k, p in zip(counts, probs):
        if k > 0:
            log += k * math.log(p) - math.lgamma(k + 1)
        # k == 0 contributes lgamma(1) = 0 and p^0 = 1.
    return log


def _conditional_terms(
    weights: np.ndarray,
    counts: np.ndarray,
    p_test: Policy,
    rm: RewardModel,
    zero_count: str,
) -> tuple[float, float]:
    """(conditional variance, conditional mean) of the estimate on one path."""
    sampled = counts > 0
    var_terms = np.divide(
        weights**2 * p_test.probs**2 * rm.variances,
        counts,
        out=np.zeros(len(counts)),
        where=sampled,
    )
    if zero_count == "strict":
        bad = ~sampled & (weights != 0) & (rm.variances > 0)
        if np.any(bad):
            raise InfiniteConditionalVariance(
                f"weight on unsampled noisy actions {np.flatnonzero(bad).tolist()}"
            )
        mean = float(np.sum(weights * p_test.probs * rm.means))
    else:
        # Unsampled actions plug in 0, a degenerate zero-variance value, so
        # they drop out of the conditional variance and shift the
        # conditional mean; the shift lands in v_path.
        mean = float(np.sum((weights * p_test.probs * rm.means)[sampled]))
    return float(np.sum(var_terms)), mean


def decompose_variance(
    weight_rule: WeightRule,
    behavior: Policy,
    p_test: Policy,
    rm: RewardModel,
    n_records: int,
    mode: Literal["exact", "mc"] = "exact",
    zero_count: Literal["empirical", "strict"] = "empirical",
    require_full_coverage: bool = False,
    reps: int = 20_000,
    seed: int = 0,
    max_count_vectors: int = 1_000_000,
) -> VarianceDecomposition:
    """Split the variance of a weighted plug-in estimator over random paths.

    All supported weight rules depend on the path only through its count
    vector, so the exact mode enumerates multinomial count vectors rather
    than raw paths; ``mc`` mode averages over sampled count vectors.

    ``zero_count`` picks the convention for paths that miss an action:
    ``"empirical"`` (default) models the implemented estimators, where an
    unsampled action plugs in 0; ``"strict"`` keeps the idealized formula,
    whose conditional variance is undefined (and raises) when a nonzero
    weight meets an unsampled noisy action.  ``require_full_coverage``
    conditions the path law on every action appearing at least once, the
    standing assumption under which the constant-weight rule has exactly
    zero path variance.
    """
    if behavior.n_actions != p_test.n_actions or rm.n_actions != p_test.n_actions:
        raise DimensionMismatch("behavior, target and reward model must share one action set")
    if n_records < 1:
        raise DimensionMismatch("n_records must be >= 1")
    k = behavior.n_actions

    if mode == "exact":
        n_vectors = math.comb(n_records + k - 1, k - 1)
        if n_vectors > max_count_vectors:
            raise ValueError(
                f"{n_vectors} count vectors exceed the enumeration limit {max_count_vectors}"
            )
        items: Iterator[tuple[np.ndarray, float]] = (
            (np.asarray(c, dtype=np.int64), math.exp(lp))
            for c in _count_vectors(n_records, k)
            if (lp := _log_multinomial(np.asarray(c), behavior.probs)) > -np.inf
        )
    elif mode == "mc":
        rng = rng_stream(seed, 271)
        draws = rng.multinomial(n_records, behavior.probs, size=reps)
        uniq, freq = np.unique(draws, axis=0, return_counts=True)
        items = ((row, cnt / reps) for row, cnt in zip(uniq, freq))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    mass = 0.0
    ev = 0.0
    em = 0.0
    em2 = 0.0
    for counts, prob in items:
        if require_full_coverage and counts.min() == 0:
            continue
        weights = np.asarray(weight_rule(counts), dtype=np.float64)
        if weights.shape != (k,):
            raise DimensionMismatch("weight rule must return one weight per action")
        var_cond, mean_cond = _conditional_terms(weights, counts, p_test, rm, zero_count)
        mass += prob
        ev += prob * var_cond
        em += prob * mean_cond
        em2 += prob * mean_cond**2
    if mass <= 0:
        raise ValueError("no path satisfies the coverage restriction")
    v_int = ev / mass
    mean = em / mass
    v_path = max(em2 / mass - mean**2, 0.0)
    return VarianceDecomposition(v_int=v_int, v_path=v_path, total=v_int + v_path)


def mse_at_fixed_path(
    weights: np.ndarray, counts: np.ndarray, p_test: Policy, rm: RewardModel
) -> MseBreakdown:
    """MSE of the weighted estimate conditional on a fixed count vector.

    ``bias_sq`` is the squared gap between the conditional mean and the
    target value; ``variance`` is the surviving reward noise.  A nonzero
    weight on an unsampled action with noisy rewards makes the conditional
    variance infinite and raises.
    """
    weights = np.asarray(weights, dtype=np.float64)
    counts = np.asarray(counts)
    if weights.shape != p_test.probs.shape or counts.shape != p_test.probs.shape:
        raise DimensionMismatch("weights, counts and policy must share one length")
    sampled = counts > 0
    bad = ~sampled & (weights != 0) & (rm.variances > 0)
    if np.any(bad):
        raise InfiniteConditionalVariance(
            f"weight on unsampled noisy actions {np.flatnonzero(bad).tolist()}"
        )
    bias = float(np.sum((weights - 1.0) * p_test.probs * rm.means))
    variance = float(
        np.sum(
            np.divide(
                weights**2 * p_test.probs**2 * rm.variances,
                counts,
                out=np.zeros(len(weights)),
                where=sampled,
            )
        )
    )
    return MseBreakdown(bias_sq=bias**2, variance=variance, mse=bias**2 + variance)


def _relevant_actions(p_test: Policy, rm: RewardModel) -> np.ndarray:
    return (p_test.probs**2 * (rm.means**2 + rm.variances)) > 0


def analytic_var_bis_multi(fam: PolicyFamily, p_test: Policy, rm: RewardModel) -> float:
    """Closed-form variance of the per-record-ratio estimator.

    ``(1/N^2) sum_a p_test^2 (rbar^2 + V_r) sum_i 1/pi_i  -  J^2 / N``.
    Every record's own policy must support every action that carries target
    mass and reward signal.
    """
    if p_test.n_actions != fam.n_actions or rm.n_actions != fam.n_actions:
        raise DimensionMismatch("family, target and reward model must share one action set")
    probs = fam.record_matrix()
    relevant = _relevant_actions(p_test, rm)
    if np.any(probs[:, relevant] == 0):
        raise UnsupportedAction("a record policy puts zero mass on a relevant action")
    n = fam.n_records
    second_moment = p_test.probs**2 * (rm.means**2 + rm.variances)
    inv_sum = np.zeros(fam.n_actions)
    inv_sum[relevant] = np.sum(1.0 / probs[:, relevant], axis=0)
    j = float(p_test.probs @ rm.means)
    return float(np.sum(second_moment * inv_sum) / n**2 - j**2 / n)


def analytic_var_fis_multi(fam: PolicyFamily, p_test: Policy, rm: RewardModel) -> float:
    """Closed-form variance of the fused-denominator estimator.

    ``sum_a p_test^2 (rbar^2 + V_r) / S  -  sum_i (sum_a p_test rbar pi_i / S)^2``
    with ``S(a) = sum_j pi_j(a)`` the pooled behavior mass over records.
    """
    if p_test.n_actions != fam.n_actions or rm.n_actions != fam.n_actions:
        raise DimensionMismatch("family, target and reward model must share one action set")
    fused = fam.fused_mass()
    relevant = _relevant_actions(p_test, rm)
    if np.any(fused[relevant] == 0):
        raise ZeroFusedMass("no family policy supports a relevant action")
    second_moment = p_test.probs**2 * (rm.means**2 + rm.variances)
    first = float(
        np.sum(
            np.divide(second_moment, fused, out=np.zeros(fam.n_actions), where=relevant)
        )
    )
    signal = np.divide(
        p_test.probs * rm.means, fused, out=np.zeros(fam.n_actions), where=fused > 0
    )
    z = fam.record_matrix() @ signal
    return float(first - np.sum(z**2))


def variance_gap(fam: PolicyFamily, p_test: Policy, rm: RewardModel) -> float:
    """Variance of the per-record-ratio estimator minus the fused one.

    Non-negative for every full-support family: pooling denominators never
    hurts.  Up to float rounding the result can dip a hair below zero, never
    materially.
    """
    return analytic_var_bis_multi(fam, p_test, rm) - analytic_var_fis_multi(fam, p_test, rm)


@dataclass(frozen=True)
class HarmonicMeanCheck:
    """Both sides of the reciprocal-sum inequality and its verdict."""

    lhs: float
    rhs: float
    holds: bool


def harmonic_mean_inequality(a: np.ndarray) -> HarmonicMeanCheck:
    """Check ``(1/N^2) sum 1/a_i >= 1 / sum a_i`` for positive entries.

    Equality holds exactly when all entries coincide.  This is the scalar
    heart of the fused-vs-per-record variance dominance.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DimensionMismatch("expected a non-empty 1-d vector")
    if np.any(a <= 0):
        raise NonPositiveEntry("all entries must be strictly positive")
    n = a.size
    lhs = float(np.sum(1.0 / a) / (n * n))
    rhs = float(1.0 / np.sum(a))
    return HarmonicMeanCheck(lhs=lhs, rhs=rhs, holds=lhs >= rhs - 1e-15)


def adaptive_ea_mean_analytic() -> float:
    """Expected within-episode average under stop-at-first-failure logging.

    One action, Bernoulli(1/2) rewards, sampling stopped at the first 0:
    the episode average has expectation ``1 - ln 2``, not 1/2.  The episode
    length is correlated with its contents, which importance-ratio
    accounting tolerates but plain averaging does not.
    """
    return 1.0 - math.log(2.0)


def adaptive_ea_bias_analytic() -> float:
    """Bias of the stop-at-first-failure episode average: ``1/2 - ln 2`` (< 0)."""
    return 0.5 - math.log(2.0)


def adaptive_ea_mean_series(k_max: int) -> float:
    """Partial series ``sum_{k=0}^{k_max} (1/2)^(k+1) k/(k+1)``.

    Converges geometrically to :func:`adaptive_ea_mean_analytic`; the term
    index ``k`` is the number of successes seen before the stopping failure.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    terms = [(0.5 ** (k + 1)) * k / (k + 1) for k in range(k_max + 1)]
    return float(np.sum(terms))
