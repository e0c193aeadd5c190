"""Independent verification oracles used by the test suite.

Everything here recomputes quantities by a different route than the library
under test: raw-path enumeration instead of the law of total variance,
generic quadratic solves instead of closed forms, exhaustive expectation
instead of unbiasedness algebra.  Keep these free of library internals
beyond the public call signatures they verify.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import optimize


def brute_force_total_variance(weight_rule, behavior, p_test, rm, n_records):
    """Mean and variance of the weighted plug-in estimator by full enumeration.

    Enumerates every raw action path and every joint reward outcome from the
    model's discrete support, evaluating the estimator exactly as
    implemented (unsampled actions plug in 0).  Exponential in the record
    count; keep instances tiny.
    """
    k = behavior.n_actions
    assert rm.support is not None, "brute force needs a discrete reward support"
    mean_acc = 0.0
    sq_acc = 0.0
    for path in itertools.product(range(k), repeat=n_records):
        p_path = math.prod(behavior.probs[a] for a in path)
        if p_path == 0.0:
            continue
        counts = np.bincount(np.asarray(path), minlength=k)
        weights = np.asarray(weight_rule(counts), dtype=np.float64)
        for outcome in itertools.product(*(rm.support[a] for a in path)):
            p_rewards = math.prod(pr for _, pr in outcome)
            if p_rewards == 0.0:
                continue
            sums = np.zeros(k)
            for a, (value, _) in zip(path, outcome):
                sums[a] += value
            r_hat = np.divide(sums, counts, out=np.zeros(k), where=counts > 0)
            est = float(np.sum(weights * p_test.probs * r_hat))
            joint = p_path * p_rewards
            mean_acc += joint * est
            sq_acc += joint * est * est
    return mean_acc, sq_acc - mean_acc**2


def brute_force_multi_expectation(estimator, policies, p_test, rm):
    """Exact expectation of a multi-policy estimator by full enumeration.

    ``estimator(actions, rewards)`` maps one concrete dataset realization to
    a real number; record ``i`` draws its action from ``policies[i]`` and
    its reward from the model support.
    """
    assert rm.support is not None
    k = p_test.n_actions
    n = len(policies)
    total = 0.0
    for path in itertools.product(range(k), repeat=n):
        p_path = math.prod(policies[i].probs[a] for i, a in enumerate(path))
        if p_path == 0.0:
            continue
        for outcome in itertools.product(*(rm.support[a] for a in path)):
            p_rewards = math.prod(pr for _, pr in outcome)
            if p_rewards == 0.0:
                continue
            rewards = np.asarray([value for value, _ in outcome])
            total += p_path * p_rewards * estimator(np.asarray(path), rewards)
    return total


def fixed_path_mse_objective(weights, counts, p_test_probs, r_bar, v_r):
    """The fixed-counts MSE as an explicit expression in the weights."""
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.sum((weights - 1.0) * p_test_probs * r_bar)
    with np.errstate(divide="ignore", invalid="ignore"):
        noise_terms = np.where(
            counts > 0, weights**2 * p_test_probs**2 * v_r / np.maximum(counts, 1), 0.0
        )
    return float(bias**2 + np.sum(noise_terms))


def solve_optimal_weights_quadratic(counts, r_bar, v_r, p_test_probs):
    """Minimize the fixed-counts MSE by a generic linear-system solve.

    The objective is ``(a.w - c)^2 + w.D.w`` with ``a = p_test * r_bar``,
    ``c = sum(p_test * r_bar)`` and ``D = diag(p_test^2 v_r / k)``; its
    stationary point solves ``(a a^T + D) w = c a``.  Actions without target
    mass do not enter the objective and get weight 0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    active = np.asarray(p_test_probs) > 0
    a = (p_test_probs * r_bar)[active]
    d = (p_test_probs**2 * v_r / counts)[active]
    c = float(np.sum(p_test_probs * r_bar))
    h = np.outer(a, a) + np.diag(d)
    solution = np.linalg.solve(h, c * a)
    weights = np.zeros(len(counts))
    weights[active] = solution
    return weights


def minimize_weights_gradient_free(counts, r_bar, v_r, p_test_probs, start=None):
    """Derivative-free minimization of the fixed-counts MSE (Powell)."""
    k = len(counts)
    if start is None:
        start = np.ones(k)
    result = optimize.minimize(
        lambda w: fixed_path_mse_objective(w, counts, p_test_probs, r_bar, v_r),
        start,
        method="Powell",
        options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 20_000, "maxfev": 200_000},
    )
    assert result.success, result.message
    return result.x


def solve_alphas_constrained(probs_at_action, r_bar, v_r):
    """Simplex-constrained minimizer of the one-action variance objective.

    Minimizes ``sum_i x_i^2 (rbar^2 (1 - p_i) + v) / p_i`` subject to
    ``sum x = 1``, ``x >= 0`` with SLSQP.
    """
    probs = np.asarray(probs_at_action, dtype=np.float64)
    costs = (r_bar**2 * (1.0 - probs) + v_r) / probs
    n = probs.size

    result = optimize.minimize(
        lambda x: float(np.sum(x**2 * costs)),
        np.full(n, 1.0 / n),
        jac=lambda x: 2.0 * x * costs,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * n,
        constraints=[{"type": "eq", "fun": lambda x: np.sum(x) - 1.0, "jac": lambda x: np.ones(n)}],
        options={"ftol": 1e-16, "maxiter": 2000},
    )
    assert result.success, result.message
    return result.x


def central_difference_gradient(fn, x, step=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        up = x.copy()
        down = x.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (fn(up) - fn(down)) / (2.0 * step)
    return grad
