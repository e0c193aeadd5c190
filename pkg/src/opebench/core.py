"""Domain types for finite-action logged data.

Actions are dense integer indices ``0 .. n_actions-1`` so that policies,
reward moments, per-action counts and per-action weights are all plain
float64/int64 vectors.  Count vectors and weight vectors are deliberately
*not* wrapped in classes: they are ordinary numpy arrays produced and
consumed by the functions below.

Everything here is immutable after construction and every function is pure,
so values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ActionOutOfRange,
    DimensionMismatch,
    NegativeProbability,
    NotNormalized,
    ZeroNormalizer,
)

#: Tolerance on |sum(probabilities) - 1| accepted by :func:`validate_policy`.
POLICY_SUM_TOL = 1e-12


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for stream ``(seed, *path)``.

    The same ``(seed, path)`` pair always yields the same stream, and
    distinct paths yield statistically independent streams, so replication
    ``i`` of an experiment can use ``rng_stream(seed, tag, i)`` regardless
    of the order replications actually run in.
    """
    entropy = [int(seed)] + [int(p) for p in path]
    if any(e < 0 for e in entropy):
        raise ValueError("stream seed components must be non-negative")
    return np.random.default_rng(entropy)


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Policy:
    """Probability distribution over the action set.

    Construct through :func:`validate_policy` (strict, never rescales) or
    :func:`renormalized_policy` (explicit rescale for user-supplied data).
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise DimensionMismatch("policy must be a non-empty 1-d vector")
        if np.any(probs < 0):
            raise NegativeProbability(f"negative entries at {np.flatnonzero(probs < 0).tolist()}")
        deviation = float(probs.sum() - 1.0)
        if abs(deviation) > POLICY_SUM_TOL:
            raise NotNormalized(deviation)
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def n_actions(self) -> int:
        return self.probs.size

    def prob(self, action: int) -> float:
        return float(self.probs[action])


def validate_policy(raw: Sequence[float] | np.ndarray) -> Policy:
    """Validate a raw probability vector into a :class:`Policy`.

    Entries must be non-negative and sum to 1 within ``POLICY_SUM_TOL``.
    Normalization is never applied silently; a vector that is off by more
    than the tolerance raises :class:`NotNormalized` carrying the deviation.
    """
    return Policy(np.asarray(raw, dtype=np.float64))


def renormalized_policy(raw: Sequence[float] | np.ndarray) -> Policy:
    """Rescale a non-negative vector to sum exactly to 1, then validate.

    This is the *explicit* escape hatch for user-supplied numbers; library
    code always goes through :func:`validate_policy`.
    """
    probs = np.asarray(raw, dtype=np.float64)
    if probs.ndim != 1 or probs.size == 0:
        raise DimensionMismatch("policy must be a non-empty 1-d vector")
    if np.any(probs < 0):
        raise NegativeProbability("cannot renormalize a vector with negative entries")
    total = probs.sum()
    if total <= 0:
        raise ZeroNormalizer("cannot renormalize a zero vector")
    return Policy(probs / total)


@dataclass(frozen=True)
class RewardModel:
    """Per-action reward distribution summarized by mean and variance.

    ``sampler(actions, rng)`` draws one reward for every entry of an integer
    action array (any shape) and is the only stochastic piece.  ``support``
    optionally lists the exact discrete distribution per action as
    ``((value, prob), ...)`` tuples; brute-force enumeration oracles require
    it, Monte Carlo paths do not.
    """

    means: np.ndarray
    variances: np.ndarray
    sampler: Callable[[np.ndarray, np.random.Generator], np.ndarray] = field(repr=False)
    support: tuple[tuple[tuple[float, float], ...], ...] | None = None

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        if means.shape != variances.shape or means.ndim != 1 or means.size == 0:
            raise DimensionMismatch("means and variances must be equal-length 1-d vectors")
        if np.any(variances < 0):
            raise ValueError("reward variances must be non-negative")
        if self.support is not None and len(self.support) != means.size:
            raise DimensionMismatch("support must list one distribution per action")
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "variances", _frozen(variances))

    @property
    def n_actions(self) -> int:
        return self.means.size

    def sample(self, actions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one reward per logged action index."""
        return self.sampler(np.asarray(actions), rng)

    @classmethod
    def gaussian(cls, means, variances) -> "RewardModel":
        means = np.asarray(means, dtype=np.float64)
        stds = np.sqrt(np.asarray(variances, dtype=np.float64))

        def sampler(actions, rng, _m=means, _s=stds):
            return rng.normal(_m[actions], _s[actions])

        return cls(means=means, variances=variances, sampler=sampler)

    @classmethod
    def two_point(cls, means, variances) -> "RewardModel":
        """Symmetric two-point rewards: ``mean ± sqrt(var)`` with prob 1/2.

        Matches the requested mean and variance exactly and exposes the full
        discrete support, which keeps enumeration oracles finite.
        """
        means = np.asarray(means, dtype=np.float64)
        sigmas = np.sqrt(np.asarray(variances, dtype=np.float64))

        def sampler(actions, rng, _m=means, _s=sigmas):
            signs = rng.integers(0, 2, size=np.shape(actions)) * 2 - 1
            return _m[actions] + signs * _s[actions]

        support = tuple(
            ((float(m), 1.0),) if s == 0.0 else ((float(m - s), 0.5), (float(m + s), 0.5))
            for m, s in zip(means, sigmas)
        )
        return cls(means=means, variances=sigmas**2, sampler=sampler, support=support)


@dataclass(frozen=True)
class LoggedDataset:
    """Sequence of ``(action, reward, policy_id)`` records.

    ``policy_ids`` indexes into whatever policy list the caller pairs the
    dataset with; single-policy data uses all zeros.
    """

    actions: np.ndarray
    rewards: np.ndarray
    policy_ids: np.ndarray

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=np.int64)
        rewards = np.asarray(self.rewards, dtype=np.float64)
        policy_ids = np.asarray(self.policy_ids, dtype=np.int64)
        if actions.ndim != 1 or actions.size == 0:
            raise DimensionMismatch("a dataset needs at least one record")
        if rewards.shape != actions.shape or policy_ids.shape != actions.shape:
            raise DimensionMismatch("actions, rewards and policy_ids must have equal length")
        if np.any(actions < 0):
            raise ActionOutOfRange("negative action index")
        if np.any(policy_ids < 0):
            raise ActionOutOfRange("negative policy id")
        object.__setattr__(self, "actions", _frozen(actions))
        object.__setattr__(self, "rewards", _frozen(rewards))
        object.__setattr__(self, "policy_ids", _frozen(policy_ids))

    @classmethod
    def single_policy(cls, actions, rewards) -> "LoggedDataset":
        actions = np.asarray(actions, dtype=np.int64)
        return cls(actions=actions, rewards=rewards, policy_ids=np.zeros_like(actions))

    @property
    def n_records(self) -> int:
        return self.actions.size


def path_counts(dataset: LoggedDataset, n_actions: int) -> np.ndarray:
    """Per-action sample counts of the logged path.

    Returns the length-``n_actions`` integer vector whose entry ``a`` counts
    the records with action ``a``; the entries always sum to the number of
    records.
    """
    if n_actions < 1:
        raise DimensionMismatch("n_actions must be >= 1")
    if np.any(dataset.actions >= n_actions):
        bad = int(dataset.actions.max())
        raise ActionOutOfRange(f"action {bad} outside [0, {n_actions})")
    return np.bincount(dataset.actions, minlength=n_actions)


def empirical_means(dataset: LoggedDataset, n_actions: int) -> np.ndarray:
    """Per-action empirical mean reward, with 0 for unsampled actions.

    The zero convention for unsampled actions keeps plug-in estimates
    defined under partial coverage; use :func:`unsampled_test_mass` to
    diagnose how much target mass that convention hides.
    """
    counts = path_counts(dataset, n_actions)
    sums = np.bincount(dataset.actions, weights=dataset.rewards, minlength=n_actions)
    return np.divide(sums, counts, out=np.zeros(n_actions), where=counts > 0)


def empirical_moments(dataset: LoggedDataset, n_actions: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-action empirical mean and population variance.

    Variance is 0 for actions sampled fewer than twice.  These are data
    estimates, not model truths; weight formulas fed from here are plug-in
    approximations and carry no optimality guarantee.
    """
    counts = path_counts(dataset, n_actions)
    means = empirical_means(dataset, n_actions)
    sq_sums = np.bincount(dataset.actions, weights=dataset.rewards**2, minlength=n_actions)
    mean_sq = np.divide(sq_sums, counts, out=np.zeros(n_actions), where=counts > 0)
    variances = np.where(counts > 1, np.maximum(mean_sq - means**2, 0.0), 0.0)
    return means, variances


def true_value(p_test: Policy, rm: RewardModel) -> float:
    """Expected reward of the target policy: sum of prob times mean reward."""
    if p_test.n_actions != rm.n_actions:
        raise DimensionMismatch(
            f"policy has {p_test.n_actions} actions, reward model has {rm.n_actions}"
        )
    return float(p_test.probs @ rm.means)


def unsampled_test_mass(p_test: Policy, counts: np.ndarray) -> float:
    """Target-policy mass sitting on actions the logged path never sampled."""
    counts = np.asarray(counts)
    if counts.shape != p_test.probs.shape:
        raise DimensionMismatch("counts and policy must have equal length")
    return float(p_test.probs[counts == 0].sum())
