"""Experiment runners producing report rows.

Every runner is deterministic given its config: all randomness flows from
``rng_stream(cfg.seed, experiment_tag, ...)`` with indices fixed by the
experiment structure, replications are drawn in bulk and reduced in index
order, and bootstrap resampling has its own child streams.  Running the
same config twice therefore yields byte-identical reports.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..analysis import (
    adaptive_ea_mean_analytic,
    analytic_var_bis_multi,
    analytic_var_fis_multi,
)
from ..core import Policy, RewardModel, rng_stream, true_value, validate_policy
from ..environments import (
    FAMILY_PROB_FLOOR,
    adaptive_stop_batch,
    behavior_policy_linear,
    make_policy_family,
    make_scaled_bernoulli,
    peaked_test_policy,
    sample_actions,
)
from ..errors import ConfigInvalid, EmptySamples, UnsupportedAction
from ..estimators_multi import CapConfig, PolicyFamily
from ..oracle_weights import optimal_unbiased_alpha_matrix
from .config import ExperimentConfig
from .report import BenchRow

# Stream tags keeping experiment kinds on disjoint random streams.
_TAG_FIGURE1 = 11
_TAG_MULTI = 21
_TAG_DOMINANCE = 41
_TAG_BOOT = 91

# Cap on index-matrix size per bootstrap chunk (entries, not bytes).
_BOOT_CHUNK_ENTRIES = 5_000_000


def _mean_stat(values: np.ndarray, axis: int) -> np.ndarray:
    return np.mean(values, axis=axis)


def _rmse_stat(errors: np.ndarray, axis: int) -> np.ndarray:
    return np.sqrt(np.mean(errors**2, axis=axis))


def bootstrap_percentiles(
    samples: np.ndarray,
    levels: tuple[float, ...] = (5.0, 50.0, 95.0),
    statistic: Callable[[np.ndarray, int], np.ndarray] | None = None,
    resamples: int = 2000,
    seed: int = 0,
) -> tuple[float, ...]:
    """Percentiles of a bootstrap-resampled statistic.

    Draws ``resamples`` with-replacement copies of ``samples``, applies the
    numpy-style ``statistic(values, axis=...)`` (default: mean) to each, and
    returns the requested percentiles of the resulting distribution.
    Deterministic given ``seed``; output is non-decreasing in the level.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size == 0:
        raise EmptySamples("bootstrap needs a non-empty 1-d sample vector")
    if resamples < 100:
        raise ValueError("resamples must be >= 100")
    if statistic is None:
        statistic = _mean_stat
    n = samples.size
    rng = rng_stream(seed, _TAG_BOOT)
    chunk = max(1, _BOOT_CHUNK_ENTRIES // n)
    stats = np.empty(resamples)
    done = 0
    while done < resamples:
        take = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(take, n))
        stats[done : done + take] = statistic(samples[idx], 1)
        done += take
    return tuple(float(v) for v in np.percentile(stats, levels))


def _row(cfg, experiment, estimator, param_name, param_value, metric, value, pcts, reps):
    return BenchRow(
        experiment=experiment,
        estimator=estimator,
        param_name=param_name,
        param_value=param_value,
        metric=metric,
        value=value,
        p5=pcts[0],
        p50=pcts[1],
        p95=pcts[2],
        reps=reps,
        seed=cfg.seed,
    )


def _batch_single_estimates(
    name: str,
    actions: np.ndarray,
    rewards: np.ndarray,
    behavior: Policy,
    p_test: Policy,
) -> np.ndarray:
    """Per-replication estimates for a (reps, n_records) action/reward batch.

    Row ``r`` equals the corresponding single-dataset estimator applied to
    ``(actions[r], rewards[r])``; the batch form just amortizes the numpy
    dispatch over replications.
    """
    if np.any(behavior.probs[actions] == 0):
        raise UnsupportedAction("a sampled action has zero behavior probability")
    if name == "EA":
        reps, n = actions.shape
        k = p_test.n_actions
        flat = actions + k * np.arange(reps)[:, None]
        counts = np.bincount(flat.ravel(), minlength=reps * k).reshape(reps, k)
        sums = np.bincount(flat.ravel(), weights=rewards.ravel(), minlength=reps * k)
        r_hat = np.divide(sums.reshape(reps, k), counts, out=np.zeros((reps, k)), where=counts > 0)
        return r_hat @ p_test.probs
    ratios = p_test.probs[actions] / behavior.probs[actions]
    if name == "BIS":
        return np.mean(ratios * rewards, axis=1)
    if name == "NIS":
        return np.sum(ratios * rewards, axis=1) / np.sum(ratios, axis=1)
    raise KeyError(f"unknown single-policy estimator {name!r}")


def run_figure1(cfg: ExperimentConfig) -> list[BenchRow]:
    """MSE sweep of the single-policy estimators over the signal fraction.

    For each grid value of ``p`` the scaled-Bernoulli bandit is replayed
    ``cfg.reps`` times under the linear behavior policy, each estimator's
    squared error against the exact target value is averaged into an MSE,
    and bootstrap percentiles of the MSE are attached.  Rows are sorted by
    ``(p, estimator)``.
    """
    cfg.validate()
    behavior = behavior_policy_linear(cfg.n_actions)
    p_test = peaked_test_policy(cfg.n_actions)
    rows = []
    for ip, p in enumerate(cfg.p_grid):
        env = make_scaled_bernoulli(cfg.n_actions, p)
        rm = env.reward_model()
        target = true_value(p_test, rm)
        rng = rng_stream(cfg.seed, _TAG_FIGURE1, ip)
        actions = sample_actions(behavior.probs, (cfg.reps, cfg.n_records), rng)
        rewards = rm.sample(actions, rng)
        for ie, name in enumerate(sorted(cfg.estimators)):
            estimates = _batch_single_estimates(name, actions, rewards, behavior, p_test)
            sq_errors = (estimates - target) ** 2
            pcts = bootstrap_percentiles(
                sq_errors,
                resamples=cfg.bootstrap_resamples,
                seed=int(rng_stream(cfg.seed, _TAG_FIGURE1, ip, ie).integers(0, 2**31)),
            )
            rows.append(
                _row(cfg, "figure1", name, "p", p, "mse", float(np.mean(sq_errors)), pcts, cfg.reps)
            )
    return rows


def _random_peaked_policy(n_actions: int, rng: np.random.Generator) -> Policy:
    probs = rng.dirichlet(np.full(n_actions, 0.5))
    floored = (1.0 - n_actions * FAMILY_PROB_FLOOR) * probs + FAMILY_PROB_FLOOR
    return validate_policy(floored / floored.sum())


def _multi_policy_setup(cfg: ExperimentConfig):
    fam = make_policy_family(
        cfg.n_actions,
        cfg.n_policies,
        cfg.spread,
        seed=cfg.seed,
        records_per_policy=cfg.records_per_policy,
    )
    env_rng = rng_stream(cfg.seed, _TAG_MULTI, 0)
    rm = RewardModel.gaussian(
        means=env_rng.uniform(1.0, 2.0, cfg.n_actions),
        variances=env_rng.uniform(0.25, 1.0, cfg.n_actions),
    )
    p_test = _random_peaked_policy(cfg.n_actions, env_rng)
    return fam, rm, p_test


def _batch_multi_estimates(
    names: tuple[str, ...],
    fam: PolicyFamily,
    rm: RewardModel,
    p_test: Policy,
    cap: float,
    reps: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Per-replication estimates of the multi-policy estimators.

    Draws ``reps`` datasets under the family (record ``i`` from its assigned
    policy) and evaluates every requested estimator on the shared data.  Row
    ``r`` of each output equals the single-dataset estimator on dataset
    ``r``; per-record weight lookups are shared across estimators.
    """
    n = fam.n_records
    k = fam.n_actions
    probs = fam.record_matrix()
    record_idx = np.arange(n)

    actions = np.empty((reps, n), dtype=np.int64)
    for pid in range(fam.n_policies):
        cols = np.flatnonzero(fam.assignment == pid)
        if cols.size:
            actions[:, cols] = sample_actions(
                fam.policies[pid].probs, (reps, cols.size), rng
            )
    rewards = rm.sample(actions, rng)

    ratio_m = p_test.probs[None, :] / probs
    fis_m = np.broadcast_to(p_test.probs / fam.fused_mass(), (n, k))
    weight_tables = {
        "BIS": ratio_m / n,
        "FIS": fis_m,
        "BCIS": np.minimum(ratio_m, cap) / n,
    }
    if any(name in ("OUIS", "NOUIS") for name in names):
        weight_tables["OUIS"] = optimal_unbiased_alpha_matrix(fam, rm) * ratio_m

    out = {}
    picked = {}
    for name in names:
        base = name.removeprefix("N")
        if base not in picked:
            picked[base] = weight_tables[base][record_idx[None, :], actions]
        w = picked[base]
        if name.startswith("N"):
            out[name] = np.sum(w * rewards, axis=1) / np.sum(w, axis=1)
        else:
            out[name] = np.sum(w * rewards, axis=1)
    return out


def run_multi_policy(cfg: ExperimentConfig) -> list[BenchRow]:
    """RMSE of the multi-policy estimator zoo on a synthetic random family.

    The family, the Gaussian reward model and the peaked target policy are
    all drawn deterministically from the seed; ``cfg.spread`` controls how
    disparate the behavior policies are.  Each estimator's RMSE against the
    exact target value is reported with bootstrap percentiles.
    """
    cfg.validate()
    fam, rm, p_test = _multi_policy_setup(cfg)
    target = true_value(p_test, rm)
    rng = rng_stream(cfg.seed, _TAG_MULTI, 1)
    estimates = _batch_multi_estimates(
        tuple(cfg.estimators), fam, rm, p_test, cfg.cap, cfg.reps, rng
    )
    rows = []
    for ie, name in enumerate(cfg.estimators):
        errors = estimates[name] - target
        pcts = bootstrap_percentiles(
            errors,
            statistic=_rmse_stat,
            resamples=cfg.bootstrap_resamples,
            seed=int(rng_stream(cfg.seed, _TAG_MULTI, 2, ie).integers(0, 2**31)),
        )
        rows.append(
            _row(
                cfg,
                "multi_policy",
                name,
                "spread",
                cfg.spread,
                "rmse",
                float(np.sqrt(np.mean(errors**2))),
                pcts,
                cfg.reps,
            )
        )
    return rows


def run_ea_bias(cfg: ExperimentConfig) -> list[BenchRow]:
    """Adaptive-logging bias demo: episode averages versus the exact mean.

    Simulates stop-at-first-failure episodes of Bernoulli(1/2) rewards and
    reports the mean within-episode average (biased), its analytic value
    ``1 - ln 2``, the gap, a per-draw importance-weighted accounting on the
    same episodes (all ratios are 1, so it is the pooled draw mean, which is
    consistent for 1/2), and the true mean 1/2.
    """
    cfg.validate()
    _, ones, lengths = adaptive_stop_batch(cfg.episodes, cfg.seed, cap=cfg.stop_cap)
    n = cfg.episodes

    # Episodes are exchangeable and their averages take one value per ones
    # count, so index bootstrap reduces to a multinomial over ones-classes.
    classes, counts = np.unique(ones, return_counts=True)
    class_len = np.where(classes < cfg.stop_cap, classes + 1.0, float(cfg.stop_cap))
    class_ea = classes / class_len
    boot_rng = rng_stream(cfg.seed, _TAG_BOOT, 3)
    resampled = boot_rng.multinomial(n, counts / n, size=cfg.bootstrap_resamples)
    boot_ea_means = (resampled @ class_ea) / n
    boot_is_means = (resampled @ classes.astype(np.float64)) / (resampled @ class_len)

    sim_mean = float(np.sum(counts * class_ea) / n)
    analytic = adaptive_ea_mean_analytic()
    is_mean = float(np.sum(ones) / np.sum(lengths))
    ea_pcts = tuple(float(v) for v in np.percentile(boot_ea_means, (5, 50, 95)))
    is_pcts = tuple(float(v) for v in np.percentile(boot_is_means, (5, 50, 95)))
    gap_pcts = tuple(v - analytic for v in ea_pcts)

    rows = []
    if "EA" in cfg.estimators:
        rows.append(_row(cfg, "ea_bias", "EA", "episodes", n, "mean", sim_mean, ea_pcts, n))
        rows.append(
            _row(cfg, "ea_bias", "EA", "episodes", n, "analytic_mean", analytic, (analytic,) * 3, 0)
        )
        rows.append(
            _row(cfg, "ea_bias", "EA", "episodes", n, "gap_vs_analytic", sim_mean - analytic, gap_pcts, n)
        )
    if "IS" in cfg.estimators:
        rows.append(_row(cfg, "ea_bias", "IS", "episodes", n, "mean", is_mean, is_pcts, n))
    if "TRUE" in cfg.estimators:
        rows.append(_row(cfg, "ea_bias", "TRUE", "episodes", n, "mean", 0.5, (0.5,) * 3, 0))
    return rows


def _dominance_instance(index: int, cfg: ExperimentConfig):
    """Instance ``index`` of the scan: two fixed controls, then random draws.

    Instance 0 pools identical policies (gap exactly zero); instance 1 is a
    two-action, two-policy family with mirrored supports and deterministic
    unit rewards, whose gap is strictly positive.
    """
    if index == 0:
        uniform = validate_policy(np.full(3, 1.0 / 3))
        fam = PolicyFamily.from_policies((uniform, uniform, uniform))
        rm = RewardModel.gaussian(means=[0.5, 1.0, 1.5], variances=[0.2, 0.4, 0.1])
        p_test = validate_policy([0.2, 0.3, 0.5])
        return fam, rm, p_test
    if index == 1:
        fam = PolicyFamily.from_policies(
            (validate_policy([0.9, 0.1]), validate_policy([0.1, 0.9]))
        )
        rm = RewardModel.gaussian(means=[1.0, 1.0], variances=[0.0, 0.0])
        p_test = validate_policy([0.5, 0.5])
        return fam, rm, p_test
    rng = rng_stream(cfg.seed, _TAG_DOMINANCE, index)
    k = int(rng.integers(2, 6))
    m = int(rng.integers(2, 11))
    policies = tuple(_random_peaked_policy(k, rng) for _ in range(m))
    fam = PolicyFamily.from_policies(policies)
    rm = RewardModel.gaussian(
        means=rng.uniform(-1.0, 1.0, k), variances=rng.uniform(0.1, 1.0, k)
    )
    p_test = _random_peaked_policy(k, rng)
    return fam, rm, p_test


def run_dominance_scan(cfg: ExperimentConfig) -> list[BenchRow]:
    """Certify the fused-vs-per-record variance ordering instance by instance.

    For every instance the closed-form variance gap is recorded (exact, so
    its percentiles collapse to the value) together with an empirical gap
    from ``cfg.mc_reps`` Monte Carlo replications, bootstrapped over
    replications.  A summary row reports the minimum analytic gap.
    """
    cfg.validate()
    rows = []
    min_gap = np.inf
    n_total = cfg.instances + 2
    for index in range(n_total):
        fam, rm, p_test = _dominance_instance(index, cfg)
        gap = analytic_var_bis_multi(fam, p_test, rm) - analytic_var_fis_multi(fam, p_test, rm)
        min_gap = min(min_gap, gap)
        rows.append(
            _row(
                cfg,
                "dominance_scan",
                "BIS_minus_FIS",
                "instance",
                index,
                "analytic_gap",
                gap,
                (gap,) * 3,
                0,
            )
        )
        mc_rng = rng_stream(cfg.seed, _TAG_DOMINANCE, index, 1)
        estimates = _batch_multi_estimates(
            ("BIS", "FIS"), fam, rm, p_test, cfg.cap, cfg.mc_reps, mc_rng
        )
        bis, fis = estimates["BIS"], estimates["FIS"]
        # Linearized variance difference: the mean of these per-replication
        # terms is the empirical gap, so a mean bootstrap applies.
        delta = (bis - bis.mean()) ** 2 - (fis - fis.mean()) ** 2
        pcts = bootstrap_percentiles(
            delta,
            resamples=cfg.bootstrap_resamples,
            seed=int(rng_stream(cfg.seed, _TAG_DOMINANCE, index, 2).integers(0, 2**31)),
        )
        rows.append(
            _row(
                cfg,
                "dominance_scan",
                "BIS_minus_FIS",
                "instance",
                index,
                "empirical_gap",
                float(np.mean(delta)),
                pcts,
                cfg.mc_reps,
            )
        )
    rows.append(
        _row(
            cfg,
            "dominance_scan",
            "BIS_minus_FIS",
            "instances",
            n_total,
            "min_analytic_gap",
            float(min_gap),
            (float(min_gap),) * 3,
            0,
        )
    )
    return rows


_RUNNERS = {
    "figure1": run_figure1,
    "multi_policy": run_multi_policy,
    "ea_bias": run_ea_bias,
    "dominance_scan": run_dominance_scan,
}


def run(cfg: ExperimentConfig) -> list[BenchRow]:
    """Dispatch a validated config to its experiment runner."""
    try:
        runner = _RUNNERS[cfg.kind]
    except KeyError:
        raise ConfigInvalid(f"unknown experiment kind {cfg.kind!r}") from None
    return runner(cfg)
