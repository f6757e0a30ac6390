import math

import numpy as np
import pytest

from inexact_oracle.oracles import FunctionProblem, ValueOracle, NoiseModel, inject_noise
from inexact_oracle.spaces import make_rng, sample_unit_sphere
from inexact_oracle.zeroth_order import (
    SmoothingParams, tau_floor, effective_tau, tau_nonsmooth, tau_smooth, two_point_grad,
    double_smooth_grad, smoothed_value, quadratic_smoothed_value, norm_bound,
    second_moment_bound, iteration_rate, noise_tolerance, gradient_oracle, zeroth_order_step_L,
)


def linear(c):
    c = np.asarray(c, float)
    return ValueOracle(FunctionProblem(lambda x: float(c @ x), lambda x: c, c.size))


def half_sq(n):
    return ValueOracle(FunctionProblem(lambda x: 0.5 * float(x @ x), lambda x: x.copy(), n))


def scaled_norm(n, M):
    return ValueOracle(FunctionProblem(lambda x: M * float(np.linalg.norm(x)), None, n))


def mean_and_se(G):
    return G.mean(axis=0), G.std(axis=0) / math.sqrt(len(G))


def test_params_validation():
    with pytest.raises(ValueError):
        SmoothingParams(tau=0.0)
    with pytest.raises(ValueError):
        SmoothingParams(tau=1.0, gamma=-1.0)


def test_tau_recipes_and_floor():
    assert tau_nonsmooth(0.1, 2.0) == pytest.approx(0.025)
    assert tau_smooth(1e-6, 4.0) == pytest.approx(5e-4)
    x = np.array([3.0, 4.0])
    assert tau_floor(x) == pytest.approx(6 * 2.0 ** -26)
    assert effective_tau(1e-3, x) == 1e-3
    with pytest.warns(RuntimeWarning):
        assert effective_tau(1e-12, x) == tau_floor(x)


def test_two_point_linear_unbiased():
    c = np.array([1.0, -2.0, 0.5])
    vo = linear(c)
    params = SmoothingParams(tau=0.1, dim=3)
    rng = make_rng(0)
    G = np.array([two_point_grad(vo, np.zeros(3), params, rng) for _ in range(100_000)])
    m, se = mean_and_se(G)
    assert np.all(np.abs(m - c) < 4 * se)


def test_two_point_quadratic_unbiased_for_smoothed():
    n = 4
    vo = half_sq(n)
    x = np.array([0.3, -1.0, 0.5, 2.0])
    params = SmoothingParams(tau=0.5, dim=n)
    rng = make_rng(1)
    G = np.array([two_point_grad(vo, x, params, rng) for _ in range(100_000)])
    m, se = mean_and_se(G)
    # the smoothed quadratic differs from f by a constant, so grad f_tau = x
    assert np.all(np.abs(m - x) < 4 * se)


def test_two_point_exact_formula():
    vo = half_sq(3)
    x = np.array([1.0, 2.0, -1.0])
    tau = 0.1
    g = two_point_grad(vo, x, SmoothingParams(tau=tau), make_rng(2))
    s = sample_unit_sphere(3, make_rng(2))
    f1, f0 = 0.5 * (x + tau * s) @ (x + tau * s), 0.5 * x @ x
    assert g == pytest.approx((3 / tau) * (f1 - f0) * s, rel=1e-12)


def test_two_point_constant_noise_cancels():
    p = FunctionProblem(lambda x: 0.5 * float(x @ x), lambda x: x, 3)
    noisy = inject_noise(p, NoiseModel(delta=0.3, dim=3, bounded_kind="constant", spatial=False))
    clean = ValueOracle(p)
    x = np.array([0.2, 0.1, -0.4])
    params = SmoothingParams(tau=1e-2)
    for seed in range(10):
        a = two_point_grad(noisy, x, params, make_rng(seed))
        b = two_point_grad(clean, x, params, make_rng(seed))
        assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


def test_norm_bound_holds():
    n, M, delta, tau = 5, 2.0, 1e-3, 1e-2
    p = FunctionProblem(lambda x: M * float(np.linalg.norm(x)), None, n)
    vo = inject_noise(p, NoiseModel(delta=delta, dim=n, R=1.0, seed=3))
    rng = make_rng(3)
    bound = norm_bound(n, M, delta, tau)
    params = SmoothingParams(tau=tau)
    for _ in range(5000):
        x = rng.standard_normal(n)
        assert np.linalg.norm(two_point_grad(vo, x, params, rng)) <= bound


@pytest.mark.parametrize("n", [2, 10, 50])
def test_second_moment_bound(n):
    # for f = ||x||^2/2 the estimator is n (<x, s> + tau/2) s; vectorized over 10^6 draws
    rng = make_rng(4)
    x = rng.standard_normal(n)
    tau, L = 0.1, 1.0
    S = sample_unit_sphere(n, rng, size=1_000_000)
    coef = n * (S @ x + 0.5 * tau)
    second = float(np.mean(coef ** 2))
    bound = second_moment_bound(n, float(np.linalg.norm(x)), L, tau)
    assert second <= 1.1 * bound


def test_smoothed_value_examples():
    rng = make_rng(5)
    c = np.array([1.0, 2.0])
    x = np.array([0.5, -0.5])
    est, se = smoothed_value(linear(c), x, 0.3, 20_000, rng)
    assert abs(est - c @ x) < 4 * se
    n, tau = 3, 0.7
    xq = np.array([1.0, 0.0, -1.0])
    est, se = smoothed_value(half_sq(n), xq, tau, 50_000, rng)
    assert abs(est - quadratic_smoothed_value(xq, tau)) < 3 * se
    assert quadratic_smoothed_value(xq, tau) == pytest.approx(1.0 + 0.5 * tau * tau * n / (n + 2))
    M = 2.0
    est, _ = smoothed_value(scaled_norm(n, M), np.zeros(n), tau, 5_000, rng)
    assert 0 <= est <= M * tau


def test_nonsmooth_sandwich():
    n, M, tau = 4, 1.5, 0.2
    vo = scaled_norm(n, M)
    rng = make_rng(6)
    for _ in range(20):
        x = rng.standard_normal(n) * rng.choice([0.01, 1.0])
        est, se = smoothed_value(vo, x, tau, 5000, rng)
        fx = M * np.linalg.norm(x)
        assert -4 * se <= est - fx <= M * tau + 4 * se


def test_smooth_sandwich_closed_form():
    rng = make_rng(7)
    for n in (1, 2, 10):
        for tau in (1e-3, 0.1, 1.0):
            x = rng.standard_normal(n)
            diff = quadratic_smoothed_value(x, tau) - 0.5 * x @ x
            assert 0 <= diff <= 0.5 * tau * tau


def test_double_smoothing():
    c = np.array([0.5, 1.0, -1.0])
    params = SmoothingParams(tau=0.05, gamma=0.2)
    rng = make_rng(8)
    G = np.array([double_smooth_grad(linear(c), np.zeros(3), params, rng) for _ in range(100_000)])
    m, se = mean_and_se(G)
    assert np.all(np.abs(m - c) < 4 * se)

    x = np.array([1.0, -0.5, 0.25])
    G = np.array([double_smooth_grad(half_sq(3), x, params, rng) for _ in range(100_000)])
    m, se = mean_and_se(G)
    assert np.all(np.abs(m - x) < 4 * se)

    p0 = SmoothingParams(tau=0.05, gamma=0.0)
    for seed in range(5):
        a = double_smooth_grad(half_sq(3), x, p0, make_rng(seed))
        b = two_point_grad(half_sq(3), x, p0, make_rng(seed))
        assert np.array_equal(a, b)


def test_gradient_oracle_counts_two_queries():
    orc = gradient_oracle(half_sq(2), SmoothingParams(tau=0.1))
    r = orc(np.ones(2), make_rng(9))
    assert r.queries_used == 2 and math.isnan(r.value) and r.grad.shape == (2,)


def test_rate_formulas():
    assert iteration_rate(10, 1.0, 1.0, 0.01) == pytest.approx(1000)
    assert iteration_rate(10, 1.0, 1.0, 0.01, p=1) == pytest.approx(100)
    assert noise_tolerance(10, 1.0, 1.0, 0.01) == pytest.approx(1e-3)
    assert noise_tolerance(10, 1.0, 1.0, 0.01, p=1) == pytest.approx(1e-4)
    assert zeroth_order_step_L(5, 2.0) == 40.0
