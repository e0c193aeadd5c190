"""Estimators for data logged under multiple behavior policies.

Each record ``i`` carries its own behavior policy ``pi_i`` (via a
:class:`PolicyFamily` assignment).  The unbiased members of the family all
take the form ``sum_i alpha_i(tau_i) * p_test(tau_i) / pi_i(tau_i) * r_i``
with per-action coefficients summing to one over records:

* ``BIS``  -- ``alpha_i = 1/N``: reweight every record by its own ratio;
* ``FIS``  -- ``alpha_i ∝ pi_i``: the pooled (fused) mixture denominator,
  which never exceeds the variance of BIS;
* ``OUIS`` -- the minimum-variance coefficients from
  :mod:`opebench.oracle_weights`, computable only with true reward moments.

``NBIS`` / ``NFIS`` / ``NOUIS`` self-normalize the same per-record weights
(exact on constant rewards, biased in general), and ``BCIS`` / ``NBCIS``
clip the raw importance ratio at a cap before averaging or normalizing,
trading bias for bounded variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LoggedDataset, Policy, RewardModel
from .errors import (
    ActionOutOfRange,
    DimensionMismatch,
    NonPositiveEntry,
    UnsupportedAction,
    ZeroFusedMass,
    ZeroNormalizer,
)
from .oracle_weights import optimal_unbiased_alpha_matrix

#: Estimator names accepted by :func:`estimate_multi`.
MULTI_ESTIMATORS = ("BIS", "FIS", "OUIS", "NBIS", "NFIS", "NOUIS", "BCIS", "NBCIS")

#: Names whose weights need true reward moments.
_NEEDS_REWARD_MODEL = ("OUIS", "NOUIS")

#: Names whose weights need a cap value.
_NEEDS_CAP = ("BCIS", "NBCIS")


@dataclass(frozen=True)
class PolicyFamily:
    """A list of behavior policies plus a per-record assignment."""

    policies: tuple[Policy, ...]
    assignment: np.ndarray

    def __post_init__(self):
        policies = tuple(self.policies)
        if not policies:
            raise DimensionMismatch("a family needs at least one policy")
        n_actions = policies[0].n_actions
        if any(p.n_actions != n_actions for p in policies):
            raise DimensionMismatch("all family policies must share one action set")
        assignment = np.asarray(self.assignment, dtype=np.int64)
        if assignment.ndim != 1 or assignment.size == 0:
            raise DimensionMismatch("assignment must be a non-empty 1-d vector")
        if np.any(assignment < 0) or np.any(assignment >= len(policies)):
            raise ActionOutOfRange("assignment indexes a missing policy")
        assignment = np.array(assignment, copy=True)
        assignment.flags.writeable = False
        object.__setattr__(self, "policies", policies)
        object.__setattr__(self, "assignment", assignment)

    @classmethod
    def from_policies(cls, policies, records_per_policy: int = 1) -> "PolicyFamily":
        """One block of ``records_per_policy`` records per policy, in order."""
        policies = tuple(policies)
        assignment = np.repeat(np.arange(len(policies)), records_per_policy)
        return cls(policies=policies, assignment=assignment)

    @classmethod
    def constant(cls, policy: Policy, n_records: int) -> "PolicyFamily":
        """Every record logged under the same single policy."""
        return cls(policies=(policy,), assignment=np.zeros(n_records, dtype=np.int64))

    @property
    def n_policies(self) -> int:
        return len(self.policies)

    @property
    def n_records(self) -> int:
        return self.assignment.size

    @property
    def n_actions(self) -> int:
        return self.policies[0].n_actions

    def record_matrix(self) -> np.ndarray:
        """Per-record behavior probabilities, shape ``(n_records, n_actions)``."""
        stacked = np.stack([p.probs for p in self.policies])
        return stacked[self.assignment]

    def fused_mass(self) -> np.ndarray:
        """Pooled behavior mass ``sum_i pi_i(a)`` over records, per action."""
        counts = np.bincount(self.assignment, minlength=self.n_policies).astype(np.float64)
        stacked = np.stack([p.probs for p in self.policies])
        return counts @ stacked


@dataclass(frozen=True)
class CapConfig:
    """Maximum admissible importance ratio for the clipped estimators."""

    cap: float = 10.0

    def __post_init__(self):
        if not self.cap > 0:
            raise NonPositiveEntry("cap must be strictly positive")

    def clip(self, ratios: np.ndarray) -> np.ndarray:
        return np.minimum(np.asarray(ratios, dtype=np.float64), self.cap)


def cap_ratios(ratios: np.ndarray, cap: CapConfig | float) -> np.ndarray:
    """Clip per-record importance ratios at the cap, preserving order."""
    if not isinstance(cap, CapConfig):
        cap = CapConfig(float(cap))
    return cap.clip(ratios)


def _check_family(dataset: LoggedDataset, fam: PolicyFamily, p_test: Policy) -> None:
    if fam.n_records != dataset.n_records:
        raise DimensionMismatch("family assignment and dataset must have equal length")
    if p_test.n_actions != fam.n_actions:
        raise DimensionMismatch("target policy and family must share one action set")
    if np.any(dataset.actions >= fam.n_actions):
        raise ActionOutOfRange("logged action outside the family's action set")
    if np.any(dataset.policy_ids >= fam.n_policies):
        raise ActionOutOfRange("logged policy id outside the family")


def record_ratios(dataset: LoggedDataset, fam: PolicyFamily, p_test: Policy) -> np.ndarray:
    """Per-record importance ratios ``p_test(tau_i) / pi_i(tau_i)``."""
    _check_family(dataset, fam, p_test)
    own = fam.record_matrix()[np.arange(dataset.n_records), dataset.actions]
    if np.any(own == 0):
        bad = np.flatnonzero(own == 0)[:5].tolist()
        raise UnsupportedAction(f"records {bad} have zero probability under their own policy")
    return p_test.probs[dataset.actions] / own


def _fused_record_weights(dataset: LoggedDataset, fam: PolicyFamily, p_test: Policy) -> np.ndarray:
    _check_family(dataset, fam, p_test)
    fused = fam.fused_mass()[dataset.actions]
    if np.any(fused == 0):
        raise ZeroFusedMass("a logged action has zero mass under every family policy")
    return p_test.probs[dataset.actions] / fused


def estimate_bis_multi(dataset: LoggedDataset, fam: PolicyFamily, p_test: Policy) -> float:
    """Mean of own-policy ratio-weighted rewards; unbiased."""
    return float(np.mean(record_ratios(dataset, fam, p_test) * dataset.rewards))


def estimate_fis(dataset: LoggedDataset, fam: PolicyFamily, p_test: Policy) -> float:
    """Fused importance sampling: pooled-mixture denominator; unbiased.

    ``sum_i p_test(tau_i) / (sum_j pi_j(tau_i)) * r_i``.  A record only needs
    *some* family policy to support its action, and one tiny behavior
    probability among many cannot blow up the weight the way it does for
    the per-record ratios of :func:`estimate_bis_multi`.
    """
    return float(np.sum(_fused_record_weights(dataset, fam, p_test) * dataset.rewards))


def estimate_ouis(
    dataset: LoggedDataset, fam: PolicyFamily, p_test: Policy, rm: RewardModel
) -> float:
    """Minimum-variance unbiased reweighting, given true reward moments."""
    ratios = record_ratios(dataset, fam, p_test)
    alphas = optimal_unbiased_alpha_matrix(fam, rm)
    picked = alphas[np.arange(dataset.n_records), dataset.actions]
    return float(np.sum(picked * ratios * dataset.rewards))


def per_record_weights(
    kind: str,
    dataset: LoggedDataset,
    fam: PolicyFamily,
    p_test: Policy,
    rm: RewardModel | None = None,
    cap: CapConfig | float | None = None,
) -> np.ndarray:
    """Per-record weights ``w_i`` such that the plain estimate is ``sum_i w_i r_i``.

    ``kind`` is one of ``BIS``, ``FIS``, ``OUIS``, ``BCIS`` (the normalized
    variants reuse the weights of their base kind).  Capping, when it
    applies, clips the raw importance ratio before the ``1/N`` factor and
    before any normalization.
    """
    base = kind.removeprefix("N")
    if base == "BIS":
        return record_ratios(dataset, fam, p_test) / dataset.n_records
    if base == "FIS":
        return _fused_record_weights(dataset, fam, p_test)
    if base == "OUIS":
        if rm is None:
            raise DimensionMismatch("OUIS weights need a reward model")
        ratios = record_ratios(dataset, fam, p_test)
        alphas = optimal_unbiased_alpha_matrix(fam, rm)
        return alphas[np.arange(dataset.n_records), dataset.actions] * ratios
    if base == "BCIS":
        if cap is None:
            cap = CapConfig()
        return cap_ratios(record_ratios(dataset, fam, p_test), cap) / dataset.n_records
    raise KeyError(f"unknown estimator {kind!r}, expected one of {MULTI_ESTIMATORS}")


def normalize_estimator(
    kind: str,
    dataset: LoggedDataset,
    fam: PolicyFamily,
    p_test: Policy,
    rm: RewardModel | None = None,
    cap: CapConfig | float | None = None,
) -> float:
    """Self-normalized variant: weighted rewards divided by total weight.

    Exact on constant rewards for every kind and insensitive to a common
    reward offset, at the price of a small bias.
    """
    weights = per_record_weights(kind, dataset, fam, p_test, rm=rm, cap=cap)
    total = float(np.sum(weights))
    if total <= 0:
        raise ZeroNormalizer("total weight mass is zero; the normalized estimate is undefined")
    return float(np.sum(weights * dataset.rewards) / total)


def estimate_multi(
    kind: str,
    dataset: LoggedDataset,
    fam: PolicyFamily,
    p_test: Policy,
    rm: RewardModel | None = None,
    cap: CapConfig | float | None = None,
) -> float:
    """Dispatch any of :data:`MULTI_ESTIMATORS` by name."""
    if kind not in MULTI_ESTIMATORS:
        raise KeyError(f"unknown estimator {kind!r}, expected one of {MULTI_ESTIMATORS}")
    if kind.startswith("N"):
        return normalize_estimator(kind, dataset, fam, p_test, rm=rm, cap=cap)
    weights = per_record_weights(kind, dataset, fam, p_test, rm=rm, cap=cap)
    return float(np.sum(weights * dataset.rewards))


__all__ = [
    "MULTI_ESTIMATORS",
    "PolicyFamily",
    "CapConfig",
    "cap_ratios",
    "record_ratios",
    "estimate_bis_multi",
    "estimate_fis",
    "estimate_ouis",
    "per_record_weights",
    "normalize_estimator",
    "estimate_multi",
]
