import itertools
import json
import math

import numpy as np
import pytest

from replaystat import (
    CapExceeded,
    MomentMap,
    blom_variance_check,
    complete_U,
    estimate_zeta,
    eval_h_k,
    influence_values,
    lemma1_sigma,
)

scalar_mean = MomentMap(q=1, g=lambda z: np.ones((1, 1)), f=lambda z: np.array([z]))


def normal_draws(gen, count):
    return gen.standard_normal(count)


def test_complete_average_matches_brute_force():
    gen = np.random.default_rng(0)
    mm = MomentMap(
        q=2,
        g=lambda z: np.array([[2.0 + z[0] ** 2, 0.3], [0.3, 1.0 + z[1] ** 2]]),
        f=lambda z: np.asarray(z),
    )
    payloads = [gen.standard_normal(2) for _ in range(7)]
    got = complete_U(payloads, mm, k=3)
    combos = list(itertools.combinations(payloads, 3))
    want = np.mean([eval_h_k(c, mm) for c in combos], axis=0)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_complete_average_of_the_mean_is_the_mean():
    # averaging subset means over all subsets recovers the grand mean
    values = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0]
    for k in (1, 2, 5, 6):
        np.testing.assert_allclose(
            complete_U(values, scalar_mean, k), np.mean(values), atol=1e-12
        )


def test_complete_average_bounds_and_cap():
    with pytest.raises(ValueError):
        complete_U([1.0, 2.0], scalar_mean, k=3)
    with pytest.raises(CapExceeded):
        complete_U(list(range(50)), scalar_mean, k=25)


def test_zeta_of_the_scalar_mean_is_one_over_k_squared():
    # one shared argument out of k: covariance is Var(Z)/k^2
    comp = estimate_zeta(normal_draws, scalar_mean, c=1, k=3, mc_reps=4000, seed=0)
    assert abs(comp.zeta[0, 0] - 1.0 / 9.0) < 3.0 * comp.std_err[0, 0]
    assert comp.c == 1 and comp.k == 3 and comp.mc_reps == 4000


def test_zeta_vanishes_for_a_degenerate_generator():
    constant = lambda gen, count: np.zeros(count) + 2.5
    comp = estimate_zeta(constant, scalar_mean, c=2, k=2, mc_reps=50, seed=1)
    np.testing.assert_array_equal(comp.zeta, [[0.0]])


def test_zeta_argument_validation():
    with pytest.raises(ValueError):
        estimate_zeta(normal_draws, scalar_mean, c=3, k=2, mc_reps=100)
    with pytest.raises(ValueError):
        estimate_zeta(normal_draws, scalar_mean, c=1, k=2, mc_reps=2)
    short = lambda gen, count: np.zeros(count - 1)
    with pytest.raises(ValueError):
        estimate_zeta(short, scalar_mean, c=1, k=2, mc_reps=10)


def test_blom_identity_on_the_mean_problem():
    report = blom_variance_check(
        normal_draws, scalar_mean, n=8, k=3, B=5, outer_reps=400, seed=0
    )
    assert report.ci_low <= 0.0 <= report.ci_high
    assert report.lhs > 0.0 and report.rhs > 0.0
    assert report.reps == 400
    decoded = json.loads(report.to_json())
    assert decoded == report.to_dict()
    assert set(decoded) == {"lhs", "rhs", "ci_low", "ci_high", "reps"}


def test_blom_argument_validation():
    with pytest.raises(ValueError):
        blom_variance_check(normal_draws, scalar_mean, n=3, k=4, B=5, outer_reps=200)
    with pytest.raises(ValueError):
        blom_variance_check(normal_draws, scalar_mean, n=8, k=3, B=5, outer_reps=50)


def test_plugin_covariance_of_the_mean_is_the_sample_variance():
    gen = np.random.default_rng(3)
    z = list(gen.standard_normal(60))
    cov = lemma1_sigma(z, scalar_mean)
    np.testing.assert_allclose(cov.sigma, [[np.var(z, ddof=1)]])
    np.testing.assert_allclose(cov.theta, [np.mean(z)])


def test_plugin_covariance_is_order_invariant():
    gen = np.random.default_rng(4)
    mm = MomentMap(
        q=2,
        g=lambda z: np.array([[1.0 + z[0] ** 2, 0.1], [0.1, 1.0]]),
        f=lambda z: np.asarray(z),
    )
    payloads = [gen.standard_normal(2) for _ in range(30)]
    a = lemma1_sigma(payloads, mm)
    b = lemma1_sigma(payloads[::-1], mm)
    np.testing.assert_allclose(a.sigma, b.sigma, atol=1e-12)
    assert a.sigma.shape == (2, 2)
    assert a.jacobian.shape == (2, 2 + 4)


def test_plugin_covariance_needs_enough_items():
    with pytest.raises(ValueError):
        lemma1_sigma([1.0, 2.0], scalar_mean)


def test_influence_rows_center_and_match_the_mean_problem():
    gen = np.random.default_rng(5)
    z = list(gen.standard_normal(25))
    infl = influence_values(z, scalar_mean)
    np.testing.assert_allclose(infl[:, 0], np.asarray(z) - np.mean(z), atol=1e-12)

    mm = MomentMap(
        q=2,
        g=lambda z: np.array([[1.0 + z[0] ** 2, 0.1], [0.1, 1.0]]),
        f=lambda z: np.asarray(z),
    )
    payloads = [gen.standard_normal(2) for _ in range(20)]
    rows = influence_values(payloads, mm)
    np.testing.assert_allclose(rows.mean(axis=0), [0.0, 0.0], atol=1e-12)


def test_jackknife_variance_against_asymptotics():
    # sqrt(n) (mean - theta) has variance ~ Var(Z): lemma1 on growing buffers
    gen = np.random.default_rng(6)
    sizes = (50, 500)
    sigmas = []
    for n in sizes:
        z = list(gen.uniform(-1.0, 1.0, n))
        sigmas.append(float(lemma1_sigma(z, scalar_mean).sigma[0, 0]))
    # both estimate Var(Unif(-1,1)) = 1/3
    for s, n in zip(sigmas, sizes):
        assert abs(s - 1.0 / 3.0) < 5.0 / math.sqrt(n)
