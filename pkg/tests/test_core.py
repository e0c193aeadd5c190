import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opebench.core import (
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
from opebench.environments import make_scaled_bernoulli, peaked_test_policy
from opebench.errors import (
    ActionOutOfRange,
    DimensionMismatch,
    NegativeProbability,
    NotNormalized,
)


class TestValidatePolicy:
    def test_uniform_two_action(self):
        p = validate_policy([0.5, 0.5])
        np.testing.assert_array_equal(p.probs, [0.5, 0.5])

    def test_underweight_vector_reports_deviation(self):
        with pytest.raises(NotNormalized) as excinfo:
            validate_policy([0.7, 0.2])
        assert excinfo.value.deviation == pytest.approx(-0.1)

    def test_signed_zero_accepted(self):
        p = validate_policy([1.0, -0.0])
        assert p.prob(1) == 0.0

    def test_negative_entry_rejected(self):
        with pytest.raises(NegativeProbability):
            validate_policy([1.2, -0.2])

    def test_empty_rejected(self):
        with pytest.raises(DimensionMismatch):
            validate_policy([])

    def test_probs_are_read_only(self):
        p = validate_policy([0.5, 0.5])
        with pytest.raises(ValueError):
            p.probs[0] = 1.0

    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=12))
    def test_normalized_random_vectors_validate(self, raw):
        probs = np.asarray(raw) / np.sum(raw)
        p = renormalized_policy(probs)
        assert abs(p.probs.sum() - 1.0) <= 1e-12
        # The validated policy is accepted again unchanged.
        assert isinstance(validate_policy(p.probs), Policy)

    def test_no_silent_normalization(self):
        with pytest.raises(NotNormalized):
            validate_policy([0.4, 0.4])
        p = renormalized_policy([0.4, 0.4])
        np.testing.assert_allclose(p.probs, [0.5, 0.5])


class TestPathCounts:
    def test_direct_count(self):
        ds = LoggedDataset.single_policy([0, 1, 1], [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(path_counts(ds, 2), [1, 2])

    def test_single_record_wide_range(self):
        ds = LoggedDataset.single_policy([0], [1.0])
        np.testing.assert_array_equal(path_counts(ds, 3), [1, 0, 0])

    def test_empty_dataset_rejected_at_construction(self):
        with pytest.raises(DimensionMismatch):
            LoggedDataset.single_policy([], [])

    def test_action_out_of_range(self):
        ds = LoggedDataset.single_policy([0, 5], [1.0, 1.0])
        with pytest.raises(ActionOutOfRange):
            path_counts(ds, 3)

    @given(
        st.lists(st.integers(min_value=0, max_value=7), min_size=1, max_size=40),
        st.integers(min_value=8, max_value=12),
    )
    def test_counts_sum_to_n(self, actions, n_actions):
        ds = LoggedDataset.single_policy(actions, np.zeros(len(actions)))
        assert path_counts(ds, n_actions).sum() == ds.n_records


class TestEmpiricalMeans:
    def test_mean_and_unsampled_zero(self):
        ds = LoggedDataset.single_policy([0, 0], [1.0, 3.0])
        np.testing.assert_array_equal(empirical_means(ds, 2), [2.0, 0.0])

    def test_negative_reward(self):
        ds = LoggedDataset.single_policy([1], [-1.0])
        np.testing.assert_array_equal(empirical_means(ds, 2), [0.0, -1.0])

    def test_interleaved(self):
        ds = LoggedDataset.single_policy([0, 1, 0], [1.0, 5.0, 3.0])
        np.testing.assert_array_equal(empirical_means(ds, 2), [2.0, 5.0])

    def test_constant_rewards_recovered_exactly(self):
        ds = LoggedDataset.single_policy([2] * 7 + [0] * 3, [1.25] * 7 + [-2.0] * 3)
        means = empirical_means(ds, 4)
        assert means[2] == 1.25
        assert means[0] == -2.0

    def test_moments(self):
        ds = LoggedDataset.single_policy([0, 0, 1], [1.0, 3.0, 4.0])
        means, variances = empirical_moments(ds, 3)
        np.testing.assert_allclose(means, [2.0, 4.0, 0.0])
        np.testing.assert_allclose(variances, [1.0, 0.0, 0.0])


class TestTrueValue:
    def test_uniform(self):
        p = validate_policy([0.5, 0.5])
        rm = RewardModel.gaussian([0.0, 2.0], [1.0, 1.0])
        assert true_value(p, rm) == 1.0

    def test_one_hot_selects(self):
        p = validate_policy([1.0, 0.0])
        rm = RewardModel.gaussian([3.0, 100.0], [0.0, 0.0])
        assert true_value(p, rm) == 3.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            true_value(validate_policy([1.0]), RewardModel.gaussian([0.0, 1.0], [1.0, 1.0]))

    def test_deterministic_bandit_value_matches_direct_sum(self):
        env = make_scaled_bernoulli(20, 1.0)
        p_test = peaked_test_policy(20)
        # Independent route: accumulate prob * scale term by term.
        expected = sum(float(p_test.probs[a]) * float(env.z[a]) for a in range(20))
        assert true_value(p_test, env.reward_model()) == pytest.approx(expected, abs=1e-15)

    def test_linear_in_means_and_probs(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            k = int(rng.integers(2, 6))
            probs = renormalized_policy(rng.uniform(0.1, 1.0, k)).probs
            m1, m2 = rng.normal(size=(2, k))
            lam = float(rng.uniform(-2, 2))
            p = validate_policy(probs)
            combined = true_value(p, RewardModel.gaussian(m1 + lam * m2, np.ones(k)))
            split = true_value(p, RewardModel.gaussian(m1, np.ones(k))) + lam * true_value(
                p, RewardModel.gaussian(m2, np.ones(k))
            )
            assert combined == pytest.approx(split, rel=1e-12, abs=1e-12)


class TestRewardModel:
    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            RewardModel.gaussian([0.0], [-1.0])

    def test_two_point_moments_exact(self):
        rm = RewardModel.two_point([1.0, -2.0], [4.0, 0.0])
        np.testing.assert_array_equal(rm.means, [1.0, -2.0])
        np.testing.assert_array_equal(rm.variances, [4.0, 0.0])
        assert rm.support[0] == ((-1.0, 0.5), (3.0, 0.5))
        assert rm.support[1] == ((-2.0, 1.0),)

    def test_sampler_moments_converge(self):
        rm = RewardModel.gaussian([1.0, -1.0], [0.25, 4.0])
        rng = rng_stream(11)
        draws = rm.sample(np.repeat([0, 1], 200_000).reshape(2, -1), rng)
        np.testing.assert_allclose(draws.mean(axis=1), rm.means, atol=0.02)
        np.testing.assert_allclose(draws.var(axis=1), rm.variances, rtol=0.05)


class TestDiagnostics:
    def test_unsampled_test_mass(self):
        p_test = validate_policy([0.5, 0.3, 0.2])
        assert unsampled_test_mass(p_test, np.array([3, 0, 1])) == pytest.approx(0.3)
        assert unsampled_test_mass(p_test, np.array([1, 1, 1])) == 0.0


class TestRngStream:
    def test_same_path_same_draws(self):
        a = rng_stream(5, 1, 2).random(4)
        b = rng_stream(5, 1, 2).random(4)
        np.testing.assert_array_equal(a, b)

    def test_distinct_paths_differ(self):
        a = rng_stream(5, 1, 2).random(4)
        b = rng_stream(5, 1, 3).random(4)
        assert not np.array_equal(a, b)

    def test_negative_components_rejected(self):
        with pytest.raises(ValueError):
            rng_stream(-1)
