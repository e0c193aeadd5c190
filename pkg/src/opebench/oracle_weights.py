"""Closed-form MSE-optimal weights, with verification helpers.

Two families are covered:

* single behavior policy: the per-action weight vector minimizing the
  fixed-counts MSE (squared conditional bias plus conditional variance) has
  an explicit closed form, implemented by
  :func:`optimal_weights_single_policy` and its one-action special case
  :func:`optimal_weight_single_action`;
* multiple behavior policies: among unbiased per-record reweightings whose
  coefficients sum to one per action, the minimum-variance coefficients are
  proportional to ``pi_i / (rbar^2 (1 - pi_i) + v_r)``, implemented by
  :func:`optimal_unbiased_alphas`.

Both formulas require the true reward moments, so they are oracles: useful
as baselines and for theory checks, not computable from data alone.
:func:`plug_in_inputs` builds the same inputs from empirical moments when a
non-oracle approximation is explicitly wanted; nothing derived from it
carries an optimality guarantee.

:func:`verify_alpha_optimality` provides an independent check that the
multi-policy coefficients beat random feasible alternatives on the
per-action variance objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LoggedDataset, Policy, RewardModel, empirical_moments, path_counts, rng_stream
from .errors import (
    DegenerateAction,
    DegenerateDenominator,
    DimensionMismatch,
    NegativeProbability,
    ZeroVariance,
)


@dataclass(frozen=True)
class OracleInputs:
    """Per-action ingredients of the single-policy optimal weights."""

    counts: np.ndarray
    r_bar: np.ndarray
    v_r: np.ndarray
    p_test: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        r_bar = np.asarray(self.r_bar, dtype=np.float64)
        v_r = np.asarray(self.v_r, dtype=np.float64)
        p_test = np.asarray(self.p_test, dtype=np.float64)
        if not (counts.shape == r_bar.shape == v_r.shape == p_test.shape) or counts.ndim != 1:
            raise DimensionMismatch("oracle inputs must be equal-length 1-d vectors")
        if np.any(counts < 0):
            raise DimensionMismatch("counts must be non-negative")
        if np.any(v_r < 0):
            raise ValueError("reward variances must be non-negative")
        if np.any(p_test < 0):
            raise NegativeProbability("target probabilities must be non-negative")
        for name, arr in (("counts", counts), ("r_bar", r_bar), ("v_r", v_r), ("p_test", p_test)):
            object.__setattr__(self, name, arr)

    @property
    def n_actions(self) -> int:
        return self.counts.size


def optimal_weights_single_policy(inputs: OracleInputs) -> np.ndarray:
    """Per-action weights minimizing the fixed-counts MSE.

    ``w(a) = [k_a rbar_a / (p_test_a v_a)] * J / (1 + sum_b k_b rbar_b^2 / v_b)``
    with ``J = sum_b p_test_b rbar_b``.  Actions with zero target probability
    do not enter the MSE at all; their weight is reported as 0 and excluded
    from the sums.  A zero variance on a supported action makes the formula
    inapplicable (:class:`ZeroVariance`): in that limit the optimal weight
    is the constant 1, which the caller should use directly.
    """
    active = inputs.p_test > 0
    if np.any(active & (inputs.v_r == 0)):
        raise ZeroVariance(
            "zero reward variance on a supported action; the optimal weight limit is 1"
        )
    j_test = float(np.sum(inputs.p_test * inputs.r_bar))
    shrink_den = 1.0 + float(
        np.sum(inputs.counts[active] * inputs.r_bar[active] ** 2 / inputs.v_r[active])
    )
    weights = np.zeros(inputs.n_actions)
    weights[active] = (
        inputs.counts[active]
        * inputs.r_bar[active]
        / (inputs.p_test[active] * inputs.v_r[active])
        * (j_test / shrink_den)
    )
    return weights


def optimal_weight_single_action(r_bar: float, v_r: float, k: int) -> float:
    """One-action optimal weight ``rbar^2 / (rbar^2 + v_r / k)``.

    Shrinks the plug-in estimate toward zero by the signal-to-noise ratio of
    the empirical mean; equals 1 when rewards are deterministic and grows
    with the sample count ``k``.
    """
    if k < 1:
        raise DimensionMismatch("k must be a positive integer")
    if v_r < 0:
        raise ValueError("variance must be non-negative")
    if v_r == 0:
        if r_bar == 0:
            raise DegenerateAction("zero mean and zero variance leave the weight undefined")
        return 1.0
    return float(r_bar**2 / (r_bar**2 + v_r / k))


def _alpha_from_probs(probs_at_action: np.ndarray, r_bar: float, v_r: float) -> np.ndarray:
    probs = np.asarray(probs_at_action, dtype=np.float64)
    if v_r < 0:
        raise ValueError("variance must be non-negative")
    if v_r == 0:
        if r_bar == 0:
            raise DegenerateDenominator(
                "deterministic zero rewards leave every coefficient denominator at zero"
            )
        # Deterministic-reward limit: raw scores pi / (1 - pi), with any
        # always-plays-it policy (pi = 1) absorbing all the weight.
        saturated = probs == 1.0
        if np.any(saturated):
            alphas = np.zeros_like(probs)
            alphas[saturated] = 1.0 / saturated.sum()
            return alphas
        raw = probs / (1.0 - probs)
    else:
        raw = probs / (r_bar**2 * (1.0 - probs) + v_r)
    total = raw.sum()
    if total <= 0:
        # No policy can produce this action, so its coefficients never enter
        # any estimate; the uniform split keeps the sum-to-one invariant.
        return np.full(probs.size, 1.0 / probs.size)
    return raw / total


def optimal_unbiased_alphas(tau: int, fam, r_bar: float, v_r: float) -> np.ndarray:
    """Per-record coefficients minimizing the one-action variance.

    ``alpha_i ∝ pi_i(tau) / (rbar^2 (1 - pi_i(tau)) + v_r)``, normalized to
    sum to 1 over records, which is exactly the unbiasedness constraint.
    With equally likely policies this is the uniform ``1/N``; with
    deterministic rewards it reduces to ``pi / (1 - pi)`` scores; with very
    noisy rewards it approaches the pooled-mixture coefficients ``∝ pi_i``.
    """
    return _alpha_from_probs(fam.record_matrix()[:, tau], r_bar, v_r)


def optimal_unbiased_alpha_matrix(fam, rm: RewardModel) -> np.ndarray:
    """Stack :func:`optimal_unbiased_alphas` for every action: shape (N, K)."""
    if rm.n_actions != fam.n_actions:
        raise DimensionMismatch("reward model and family must share one action set")
    out = np.empty((fam.n_records, fam.n_actions))
    for tau in range(fam.n_actions):
        out[:, tau] = optimal_unbiased_alphas(tau, fam, float(rm.means[tau]), float(rm.variances[tau]))
    return out


def alpha_variance_objective(alphas: np.ndarray, probs_at_action: np.ndarray, r_bar: float, v_r: float) -> float:
    """One-action variance of a coefficient vector, up to the target-mass factor.

    ``sum_i alpha_i^2 * (rbar^2 (1 - pi_i) + v_r) / pi_i``; the common
    ``p_test(tau)^2`` factor is dropped since it rescales every candidate
    identically.  Coefficients on zero-probability policies cost infinity
    unless they are zero.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    probs = np.asarray(probs_at_action, dtype=np.float64)
    if alphas.shape != probs.shape:
        raise DimensionMismatch("alphas and probabilities must have equal length")
    costs = np.divide(
        r_bar**2 * (1.0 - probs) + v_r,
        probs,
        out=np.full(probs.shape, np.inf),
        where=probs > 0,
    )
    terms = np.where(alphas == 0.0, 0.0, alphas**2 * costs)
    return float(np.sum(terms))


@dataclass(frozen=True)
class AlphaOptimalityReport:
    """Outcome of sampling the per-action objective around the closed form."""

    objective_at_opt: float
    min_gap: float
    n_candidates: int
    holds: bool


def verify_alpha_optimality(
    tau: int,
    fam,
    r_bar: float,
    v_r: float,
    n_samples: int = 200,
    seed: int = 0,
    tolerance: float = 1e-10,
) -> AlphaOptimalityReport:
    """Check the closed-form coefficients against feasible alternatives.

    Evaluates the per-action variance objective at the closed form, at the
    uniform split, at the pooled-mixture coefficients, and at ``n_samples``
    random points of the simplex; reports the smallest objective gap.  A
    negative gap beyond ``tolerance`` would falsify optimality.
    """
    probs = fam.record_matrix()[:, tau]
    n = probs.size
    opt = _alpha_from_probs(probs, r_bar, v_r)
    f_opt = alpha_variance_objective(opt, probs, r_bar, v_r)
    rng = rng_stream(seed, 617, tau)
    candidates = [np.full(n, 1.0 / n)]
    if probs.sum() > 0:
        candidates.append(probs / probs.sum())
    candidates.extend(rng.dirichlet(np.ones(n)) for _ in range(n_samples))
    gaps = [alpha_variance_objective(c, probs, r_bar, v_r) - f_opt for c in candidates]
    min_gap = float(min(gaps))
    return AlphaOptimalityReport(
        objective_at_opt=f_opt,
        min_gap=min_gap,
        n_candidates=len(candidates),
        holds=min_gap >= -tolerance,
    )


def plug_in_inputs(dataset: LoggedDataset, n_actions: int, p_test: Policy) -> OracleInputs:
    """Non-oracle inputs built from empirical reward moments.

    Convenience for exploratory use only: weights computed from these are
    plug-in approximations, and none of the optimality properties proved
    for the true-moment formulas apply to them.
    """
    means, variances = empirical_moments(dataset, n_actions)
    return OracleInputs(
        counts=path_counts(dataset, n_actions),
        r_bar=means,
        v_r=variances,
        p_test=p_test.probs,
    )
