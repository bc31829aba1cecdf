import numpy as np
import pytest

from blocksolve.errors import ConfigError
from blocksolve.noise import (
    difference_table,
    ecnoise,
    gamma_coefficient,
    noise_map,
)


def seeded_noisy_quadratic(sigma, seed):
    rng = np.random.default_rng(seed)

    def f(x):
        return float(np.sum(np.atleast_1d(x) ** 2)) + sigma * rng.standard_normal()

    return f


def test_gamma_values():
    assert gamma_coefficient(1) == 0.5
    assert gamma_coefficient(2) == pytest.approx(1.0 / 6.0, rel=0, abs=0)
    assert gamma_coefficient(3) == pytest.approx(1.0 / 20.0, rel=0, abs=0)
    from math import factorial

    for k in range(1, 7):
        assert gamma_coefficient(k) == factorial(k) ** 2 / factorial(2 * k)


def test_difference_table_example():
    t = difference_table([1.0, 2.0, 4.0])
    np.testing.assert_array_equal(t.column(1), [1.0, 2.0])
    np.testing.assert_array_equal(t.column(2), [1.0])


def test_difference_table_constant_and_affine():
    t = difference_table([3.0] * 6)
    assert all(np.all(t.column(k) == 0.0) for k in range(1, t.order + 1))
    t = difference_table(np.linspace(0.0, 1.0, 7))
    assert np.abs(t.column(2)).max() <= 1e-15


def test_difference_table_recurrence():
    rng = np.random.default_rng(0)
    vals = rng.standard_normal(9)
    t = difference_table(vals)
    for k in range(1, t.order + 1):
        np.testing.assert_allclose(
            t.column(k), t.column(k - 1)[1:] - t.column(k - 1)[:-1], atol=0,
        )


def test_difference_table_needs_two_values():
    with pytest.raises(ConfigError):
        difference_table([1.0])


def test_ecnoise_constant_function():
    est = ecnoise(lambda x: 42.0, np.zeros(2), m=8, seed=0)
    assert est.sigma_abs == 0.0
    assert est.reliable


def test_ecnoise_budget():
    calls = []

    def f(x):
        calls.append(np.array(x, copy=True))
        return float(np.sum(np.atleast_1d(x) ** 2))

    ecnoise(f, np.ones(2), m=8, seed=1)
    assert len(calls) == 9  # exactly m + 1


def test_ecnoise_m_too_small():
    with pytest.raises(ConfigError):
        ecnoise(lambda x: 0.0, np.zeros(1), m=3)


@pytest.mark.parametrize("sigma", [1e-7, 1e-5, 1e-3])
def test_ecnoise_recovery(sigma):
    hits = 0
    for seed in range(100):
        f = seeded_noisy_quadratic(sigma, seed + 17)
        est = ecnoise(f, np.array([1.0, 0.5]), h=1e-4, m=8, seed=seed)
        if est.reliable and sigma / 2 <= est.sigma_abs <= 2 * sigma:
            hits += 1
    assert hits >= 90


def test_ecnoise_recovery_against_sample_std():
    # oracle: sample standard deviation of many direct noise draws
    sigma = 1e-5
    draws = sigma * np.random.default_rng(0).standard_normal(10_000)
    oracle = float(np.std(draws))
    est = ecnoise(seeded_noisy_quadratic(sigma, 3), np.array([0.7]), h=1e-4, m=8, seed=3)
    assert est.reliable
    assert 0.5 * oracle <= est.sigma_abs <= 2.0 * oracle


def test_scale_equivariance_and_shift_invariance():
    # deterministic per-point wobble (same samples per seed), amplitude well
    # above the rounding granularity of the scaled/shifted values
    def base(x):
        x = float(np.atleast_1d(x)[0])
        return x * x + 0.01 * np.sin(1e6 * x)

    x = np.array([1.3])
    est1 = ecnoise(base, x, h=1e-4, m=8, seed=5)
    est_scaled = ecnoise(lambda v: 7.5 * base(v), x, h=1e-4, m=8, seed=5)
    est_shifted = ecnoise(lambda v: base(v) + 1.0, x, h=1e-4, m=8, seed=5)
    assert est_scaled.sigma_abs == pytest.approx(7.5 * est1.sigma_abs, rel=1e-12)
    assert est_shifted.sigma_abs == pytest.approx(est1.sigma_abs, rel=1e-12)


def test_ecnoise_rel_undefined_at_zero():
    est = ecnoise(lambda x: 0.0, np.zeros(1), m=8, seed=0)
    assert est.rel_undefined
    assert np.isnan(est.sigma_rel)


def test_ecnoise_unreliable_advisory():
    # huge step: curvature dominates every order
    est = ecnoise(lambda x: float(np.atleast_1d(x)[0]) ** 6, np.array([10.0]),
                  h=5.0, m=8, seed=0)
    if not est.reliable:
        assert "rescale h" in est.advisory


def test_noise_map_noiseless():
    rows = noise_map(lambda x: float(np.sum(np.atleast_1d(x) ** 2)),
                     [np.array([0.1]), np.array([1.0])], h=1e-5, m=8, seed=0)
    for _, est, err in rows:
        assert err == ""
        assert est.sigma_abs <= 1e-10


def test_noise_map_recovers_amplitude_ordering():
    amps = [1e-7, 1e-5, 1e-3]
    points = [np.array([1.0 + i]) for i in range(3)]

    def f_for(i):
        return seeded_noisy_quadratic(amps[i], 100 + i)

    results = []
    for i, p in enumerate(points):
        est = ecnoise(f_for(i), p, h=1e-4, m=8, seed=i)
        results.append(est.sigma_rel)
    assert results[0] < results[1] < results[2]


def test_noise_map_continues_after_failure():
    def f(x):
        if np.atleast_1d(x)[0] > 0.5:
            raise RuntimeError("sim blew up")
        return float(np.sum(np.atleast_1d(x) ** 2))

    rows = noise_map(f, [np.array([0.0]), np.array([1.0]), np.array([0.1])],
                     h=1e-5, m=8, seed=0)
    assert rows[0][2] == "" and rows[2][2] == ""
    assert rows[1][1] is None and "blew up" in rows[1][2]


def test_noise_map_empty_points():
    with pytest.raises(ConfigError):
        noise_map(lambda x: 0.0, [], h=1e-5, m=8, seed=0)


def test_noise_map_single_point():
    rows = noise_map(lambda x: 1.0, [np.array([0.0])], h=1e-5, m=8, seed=0)
    assert len(rows) == 1
