import numpy as np
import pytest

from opebench.analysis import decompose_variance, ea_weight_rule
from opebench.core import (
    LoggedDataset,
    RewardModel,
    empirical_means,
    path_counts,
    renormalized_policy,
    rng_stream,
    true_value,
    validate_policy,
)
from opebench.environments import (
    behavior_policy_linear,
    make_scaled_bernoulli,
    peaked_test_policy,
    sample_dataset,
)
from opebench.errors import (
    DegenerateDenominator,
    DimensionMismatch,
    UnsupportedAction,
    ZeroNormalizer,
)
from opebench.estimators_single import (
    estimate,
    estimate_bis,
    estimate_ea,
    estimate_nis,
    estimate_weighted,
    nis_weight_approx,
    omega_bis,
    omega_ea,
    omega_nis,
)


def random_logged_setup(rng, k=None, n=None, with_zeros=False):
    """Random full-support instance: behavior, target, dataset, model."""
    k = k or int(rng.integers(2, 6))
    n = n or int(rng.integers(3, 30))
    behavior = renormalized_policy(rng.uniform(0.1, 1.0, k))
    raw_test = rng.uniform(0.0 if with_zeros else 0.05, 1.0, k)
    p_test = renormalized_policy(raw_test)
    rm = RewardModel.gaussian(rng.normal(size=k), rng.uniform(0.1, 1.0, k))
    ds = sample_dataset(rm, behavior, n, seed=int(rng.integers(0, 2**31)))
    return behavior, p_test, rm, ds


class TestEstimateWeighted:
    def test_unit_weights(self):
        p = validate_policy([0.5, 0.5])
        assert estimate_weighted(np.ones(2), p, np.array([2.0, 4.0])) == 3.0

    def test_zero_weights(self):
        p = validate_policy([0.5, 0.5])
        assert estimate_weighted(np.zeros(2), p, np.array([7.0, -4.0])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            estimate_weighted(np.ones(3), validate_policy([0.5, 0.5]), np.zeros(2))

    def test_matches_record_level_bis_on_random_datasets(self):
        rng = np.random.default_rng(101)
        for _ in range(30):
            behavior, p_test, _, ds = random_logged_setup(rng)
            counts = path_counts(ds, behavior.n_actions)
            weights = omega_bis(counts, ds.n_records, behavior)
            r_hat = empirical_means(ds, behavior.n_actions)
            assert estimate_weighted(weights, p_test, r_hat) == pytest.approx(
                estimate_bis(ds, behavior, p_test), abs=1e-12, rel=1e-12
            )


class TestOmegaBis:
    def test_weight_one_at_balance(self):
        behavior = validate_policy([0.2, 0.8])
        weights = omega_bis(np.array([2, 8]), 10, behavior)
        np.testing.assert_allclose(weights, [1.0, 1.0])

    def test_oversampled_action(self):
        behavior = validate_policy([0.2, 0.8])
        weights = omega_bis(np.array([4, 6]), 10, behavior)
        assert weights[0] == pytest.approx(2.0)

    def test_zero_count_on_unsupported_action_is_fine(self):
        behavior = validate_policy([1.0, 0.0])
        weights = omega_bis(np.array([10, 0]), 10, behavior)
        np.testing.assert_array_equal(weights, [1.0, 0.0])

    def test_positive_count_on_unsupported_action_raises(self):
        behavior = validate_policy([1.0, 0.0])
        with pytest.raises(UnsupportedAction):
            omega_bis(np.array([9, 1]), 10, behavior)


class TestOmegaNis:
    def test_single_action_collapses(self):
        behavior = validate_policy([1.0])
        ds = LoggedDataset.single_policy([0, 0, 0], [2.0, 4.0, 9.0])
        np.testing.assert_allclose(omega_nis(ds, behavior, behavior), [1.0])
        assert estimate_nis(ds, behavior, behavior) == pytest.approx(5.0)

    def test_on_policy_balance_gives_unit_weights(self):
        behavior = validate_policy([0.25, 0.75])
        actions = [0] * 1 + [1] * 3
        ds = LoggedDataset.single_policy(actions, np.zeros(4))
        np.testing.assert_allclose(omega_nis(ds, behavior, behavior), [1.0, 1.0])

    def test_weight_form_matches_direct_formula(self):
        rng = np.random.default_rng(202)
        for _ in range(30):
            behavior, p_test, _, ds = random_logged_setup(rng)
            weights = omega_nis(ds, behavior, p_test)
            r_hat = empirical_means(ds, behavior.n_actions)
            assert estimate_weighted(weights, p_test, r_hat) == pytest.approx(
                estimate_nis(ds, behavior, p_test), abs=1e-12, rel=1e-12
            )

    def test_zero_normalizer(self):
        behavior = validate_policy([0.5, 0.5])
        p_test = validate_policy([0.0, 1.0])
        ds = LoggedDataset.single_policy([0, 0], [1.0, 2.0])
        with pytest.raises(ZeroNormalizer):
            omega_nis(ds, behavior, p_test)
        with pytest.raises(ZeroNormalizer):
            estimate_nis(ds, behavior, p_test)


class TestPointEstimators:
    def test_deterministic_full_coverage_ea_is_exact(self):
        rng = np.random.default_rng(3)
        k = 4
        behavior = renormalized_policy(rng.uniform(0.2, 1.0, k))
        p_test = renormalized_policy(rng.uniform(0.2, 1.0, k))
        means = rng.normal(size=k)
        rm = RewardModel.gaussian(means, np.zeros(k))
        actions = np.tile(np.arange(k), 3)
        ds = LoggedDataset.single_policy(actions, means[actions])
        assert estimate_ea(ds, behavior, p_test) == pytest.approx(
            true_value(p_test, rm), abs=1e-15
        )

    def test_single_action_all_estimators_agree(self):
        behavior = validate_policy([1.0])
        ds = LoggedDataset.single_policy([0, 0], [2.0, 4.0])
        for kind in ("BIS", "NIS", "EA"):
            assert estimate(kind, ds, behavior, behavior) == pytest.approx(3.0)

    def test_weight_form_consistency_all_kinds(self):
        rng = np.random.default_rng(404)
        for _ in range(25):
            behavior, p_test, _, ds = random_logged_setup(rng)
            k = behavior.n_actions
            counts = path_counts(ds, k)
            r_hat = empirical_means(ds, k)
            pairs = [
                (omega_bis(counts, ds.n_records, behavior), estimate_bis),
                (omega_nis(ds, behavior, p_test), estimate_nis),
                (omega_ea(k), estimate_ea),
            ]
            for weights, fn in pairs:
                assert estimate_weighted(weights, p_test, r_hat) == pytest.approx(
                    fn(ds, behavior, p_test), abs=1e-12, rel=1e-12
                )

    def test_bis_unbiased_on_tent_bandit(self):
        # Signal fraction 0.5, 1000 records, 2000 replications.
        env = make_scaled_bernoulli(20, 0.5)
        rm = env.reward_model()
        behavior = behavior_policy_linear(20)
        p_test = peaked_test_policy(20)
        target = true_value(p_test, rm)
        reps = 2000
        estimates = np.empty(reps)
        for i in range(reps):
            ds = sample_dataset(rm, behavior, 1000, seed=rng_stream(9, i).integers(0, 2**31))
            estimates[i] = estimate_bis(ds, behavior, p_test)
        se = estimates.std(ddof=1) / np.sqrt(reps)
        assert abs(estimates.mean() - target) <= 3 * se

    def test_ea_has_zero_path_variance(self):
        behavior = validate_policy([0.3, 0.7])
        p_test = validate_policy([0.6, 0.4])
        rm = RewardModel.gaussian([1.0, -0.5], [0.4, 0.2])
        decomp = decompose_variance(
            ea_weight_rule(), behavior, p_test, rm, n_records=5, require_full_coverage=True
        )
        assert decomp.v_path == 0.0


class TestNisWeightApprox:
    def test_peaked_target_limit(self):
        eps = 1e-9
        value = nis_weight_approx(7, 1000, 0.01, 1.0 - eps)
        assert value == pytest.approx(1.0, abs=1e-6)

    def test_vanishing_target_limit(self):
        eps = 1e-9
        value = nis_weight_approx(7, 1000, 0.01, eps)
        assert value == pytest.approx(7 / (0.01 * 1000), rel=1e-6)

    def test_half_mass_harmonic_form(self):
        k, n, pi = 4, 100, 0.05
        expected = 2.0 / (1.0 + pi * n / k)
        assert nis_weight_approx(k, n, pi, 0.5) == pytest.approx(expected, rel=1e-12)

    def test_degenerate_denominator(self):
        with pytest.raises(DegenerateDenominator):
            nis_weight_approx(0, 100, 0.1, 1.0)

    def test_tracks_exact_weights_at_large_n(self):
        # Behavior independent of rewards, N = 1e4: the approximation stays
        # within 0.05 of the exact self-normalized weight wherever the
        # action was sampled at least 10 times.  The 0.05 threshold is a
        # pinned testing choice, not a derived bound.
        rng = np.random.default_rng(77)
        n = 10_000
        for _ in range(5):
            k = int(rng.integers(3, 8))
            behavior = renormalized_policy(rng.uniform(0.05, 1.0, k))
            p_test = renormalized_policy(rng.uniform(0.05, 1.0, k))
            rm = RewardModel.gaussian(rng.normal(size=k), rng.uniform(0.1, 0.5, k))
            ds = sample_dataset(rm, behavior, n, seed=int(rng.integers(0, 2**31)))
            counts = path_counts(ds, k)
            exact = omega_nis(ds, behavior, p_test)
            for a in range(k):
                if counts[a] >= 10:
                    approx = nis_weight_approx(
                        int(counts[a]), n, float(behavior.probs[a]), float(p_test.probs[a])
                    )
                    assert abs(exact[a] - approx) <= 0.05
