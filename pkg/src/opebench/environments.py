"""Synthetic environments and data generators for the benchmark suite.

The workhorse is the scaled-Bernoulli bandit: action ``i`` (1-based) pays
``z_i / sqrt(p)`` with probability ``p`` and 0 otherwise, with a symmetric
tent-shaped scale profile ``z``.  The mean is ``sqrt(p) * z_i`` and the
variance ``(1 - p) * z_i^2``, so the signal fraction
``mean^2 / (mean^2 + variance)`` equals ``p`` for every paying action and a
single knob sweeps the estimators from the noise-dominated to the
deterministic regime.

Also here: the linearly increasing behavior policy and two-peak target
policy used with that bandit, seeded logged-data sampling, random policy
families of controllable disparity, and the stop-at-first-failure adaptive
sampler whose episode average is biased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LoggedDataset, Policy, RewardModel, rng_stream, validate_policy
from .errors import DimensionMismatch, IndexClash, InvalidP, OddK
from .estimators_multi import PolicyFamily

#: Full-support floor applied to generated family policies.
FAMILY_PROB_FLOOR = 1e-4


@dataclass(frozen=True)
class ScaledBernoulliEnv:
    """Scaled-Bernoulli bandit: pay ``z/sqrt(p)`` with probability ``p``."""

    n_actions: int
    p: float
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        z = np.array(z, copy=True)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    def reward_model(self) -> RewardModel:
        scale = self.z / math.sqrt(self.p)
        p = self.p

        def sampler(actions, rng, _scale=scale, _p=p):
            hits = rng.random(np.shape(actions)) < _p
            return hits * _scale[actions]

        support = tuple(
            ((float(s), p), (0.0, 1.0 - p)) if p < 1.0 else ((float(s), 1.0),) for s in scale
        )
        return RewardModel(
            means=math.sqrt(self.p) * self.z,
            variances=(1.0 - self.p) * self.z**2,
            sampler=sampler,
            support=support,
        )


def make_scaled_bernoulli(n_actions: int, p: float) -> ScaledBernoulliEnv:
    """Build the symmetric tent-profile bandit.

    With 1-based indexing, ``z_i = i/K`` up to the midpoint and
    ``z_i = (K - i)/K`` beyond it, so the middle action pays best and the
    last one pays nothing.  ``n_actions`` must be even so the profile is
    symmetric; ``p`` must lie in (0, 1].
    """
    if n_actions < 2 or n_actions % 2 != 0:
        raise OddK("n_actions must be even and >= 2")
    if not 0.0 < p <= 1.0:
        raise InvalidP("p must lie in (0, 1]")
    i = np.arange(1, n_actions + 1)
    z = np.where(i <= n_actions // 2, i, n_actions - i) / n_actions
    return ScaledBernoulliEnv(n_actions=n_actions, p=float(p), z=z)


def behavior_policy_linear(n_actions: int) -> Policy:
    """Linearly increasing behavior policy ``pi(i) = 2i / (K (K + 1))``.

    Higher-indexed actions are logged more often, so of two actions with
    the same reward scale the one past the midpoint is better covered.
    """
    if n_actions < 1:
        raise DimensionMismatch("n_actions must be >= 1")
    i = np.arange(1, n_actions + 1, dtype=np.float64)
    return validate_policy(2.0 * i / (n_actions * (n_actions + 1)))


def peaked_test_policy(
    n_actions: int, peak_indices: tuple[int, int] = (9, 19), peak_mass: float = 0.475
) -> Policy:
    """Target policy concentrated on two actions.

    Each peak gets ``peak_mass``; the remaining ``1 - 2 * peak_mass`` is
    spread evenly over the other ``K - 2`` actions.  The defaults put the
    peaks on 0-based actions 9 and 19, the best-paying and the worthless
    action of the 20-arm tent profile.
    """
    a, b = peak_indices
    if a == b or not (0 <= a < n_actions) or not (0 <= b < n_actions):
        raise IndexClash(f"peak indices {peak_indices} must be distinct and within range")
    if not 0.0 < peak_mass <= 0.5:
        raise InvalidP("peak_mass must lie in (0, 0.5]")
    if n_actions < 3 and peak_mass != 0.5:
        raise IndexClash("with two actions the peaks must carry all the mass")
    probs = np.zeros(n_actions)
    rest = 1.0 - 2.0 * peak_mass
    if n_actions > 2:
        probs[:] = rest / (n_actions - 2)
    probs[a] = peak_mass
    probs[b] = peak_mass
    return validate_policy(probs)


def sample_actions(probs: np.ndarray, size, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of action indices; vectorized over any shape."""
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    actions = np.searchsorted(cum, rng.random(size), side="right")
    return actions.astype(np.int64)


def sample_dataset(
    rm: RewardModel,
    source: Policy | PolicyFamily,
    n_records: int | None = None,
    seed: int = 0,
) -> LoggedDataset:
    """Draw a logged dataset: record ``i`` samples its policy, then a reward.

    ``source`` is a single behavior policy (``n_records`` required) or a
    :class:`PolicyFamily` whose assignment fixes both the record count and
    each record's policy id.  Policies are fixed before sampling, so the
    data is non-adaptive.  Identical seeds give bit-identical datasets.
    """
    rng = rng_stream(seed, 101)
    if isinstance(source, PolicyFamily):
        if n_records is not None and n_records != source.n_records:
            raise DimensionMismatch("n_records conflicts with the family assignment")
        if rm.n_actions != source.n_actions:
            raise DimensionMismatch("reward model and family must share one action set")
        probs = source.record_matrix()
        u = rng.random(source.n_records)
        cum = np.cumsum(probs, axis=1)
        cum[:, -1] = 1.0
        actions = np.array(
            [int(np.searchsorted(cum[i], u[i], side="right")) for i in range(source.n_records)],
            dtype=np.int64,
        )
        policy_ids = source.assignment
    else:
        if n_records is None or n_records < 1:
            raise DimensionMismatch("a single-policy sample needs n_records >= 1")
        if rm.n_actions != source.n_actions:
            raise DimensionMismatch("reward model and policy must share one action set")
        actions = sample_actions(source.probs, n_records, rng)
        policy_ids = np.zeros(n_records, dtype=np.int64)
    rewards = rm.sample(actions, rng)
    return LoggedDataset(actions=actions, rewards=rewards, policy_ids=policy_ids)


def make_policy_family(
    n_actions: int,
    n_policies: int,
    spread: float,
    seed: int = 0,
    records_per_policy: int = 1,
) -> PolicyFamily:
    """Random full-support family interpolating uniform -> peaked.

    ``spread`` in [0, 1] mixes each policy between the uniform distribution
    and an independent random draw concentrated on a few actions; 0 gives
    identical uniform policies, 1 maximally disparate ones.  Every entry is
    floored at :data:`FAMILY_PROB_FLOOR` so importance ratios stay finite.
    """
    if not 0.0 <= spread <= 1.0:
        raise InvalidP("spread must lie in [0, 1]")
    if n_actions < 1 or n_policies < 1:
        raise DimensionMismatch("need at least one action and one policy")
    uniform = np.full(n_actions, 1.0 / n_actions)
    if spread == 0.0:
        policies = tuple(validate_policy(uniform) for _ in range(n_policies))
        return PolicyFamily.from_policies(policies, records_per_policy)
    rng = rng_stream(seed, 313)
    floor = FAMILY_PROB_FLOOR
    policies = []
    for _ in range(n_policies):
        peaked = rng.dirichlet(np.full(n_actions, 0.5))
        mixed = (1.0 - spread) * uniform + spread * peaked
        # Affine floor keeps entries >= floor while summing exactly to one.
        flat = (1.0 - n_actions * floor) * mixed + floor
        policies.append(validate_policy(flat / flat.sum()))
    return PolicyFamily.from_policies(tuple(policies), records_per_policy)


@dataclass(frozen=True)
class AdaptiveStopLog:
    """One stop-at-first-failure episode of Bernoulli(1/2) rewards.

    ``draws`` holds the observed 0/1 rewards; at most one 0 appears and only
    in the last position, unless the hard cap cut the episode short.
    """

    draws: np.ndarray
    cap: int

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.int64)
        if draws.ndim != 1 or draws.size == 0:
            raise DimensionMismatch("an episode has at least one draw")
        zeros = np.flatnonzero(draws == 0)
        truncated = zeros.size == 0
        if truncated and draws.size != self.cap:
            raise ValueError("an episode without a 0 must have hit the cap")
        if not truncated and zeros[0] != draws.size - 1:
            raise ValueError("the stopping 0 must be the last draw")
        draws = np.array(draws, copy=True)
        draws.flags.writeable = False
        object.__setattr__(self, "draws", draws)

    @property
    def length(self) -> int:
        return self.draws.size

    @property
    def n_ones(self) -> int:
        return int(np.sum(self.draws))

    @property
    def ea_estimate(self) -> float:
        """Within-episode average reward, the quantity whose mean is biased."""
        return self.n_ones / self.length


def sample_adaptive_stop(seed: int, cap: int = 10_000) -> AdaptiveStopLog:
    """Draw one episode: flip fair coins until the first 0 or the cap.

    The cap guards against an unbounded loop; an episode actually reaching
    the default cap has probability ``2**-10000``.
    """
    if cap < 1:
        raise DimensionMismatch("cap must be >= 1")
    rng = rng_stream(seed, 401)
    draws = []
    for _ in range(cap):
        bit = int(rng.integers(0, 2))
        draws.append(bit)
        if bit == 0:
            break
    return AdaptiveStopLog(draws=np.asarray(draws), cap=cap)


def adaptive_stop_batch(
    n_episodes: int, seed: int, cap: int = 10_000
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized episode batch: (episode averages, ones counts, lengths).

    The number of leading 1s is geometric, so whole episodes are drawn at
    once; episode ``j`` matches :func:`sample_adaptive_stop` in distribution,
    not draw for draw.
    """
    if n_episodes < 1:
        raise DimensionMismatch("need at least one episode")
    rng = rng_stream(seed, 402)
    lengths = rng.geometric(0.5, size=n_episodes)
    ones = lengths - 1
    truncated = lengths > cap
    lengths[truncated] = cap
    ones[truncated] = cap
    return ones / lengths, ones, lengths
