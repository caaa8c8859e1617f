"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
all).  The heavyweight replicated studies are shared module-level
fixtures; everything is deterministic given the seeds fixed here.
"""

import math
import time

import numpy as np
import pytest

from replaystat import (
    ExperimentConfig,
    FourierBasis,
    InitSpec,
    MomentMap,
    OuSpec,
    PhibeOrder,
    RegressionSpec,
    ReplayConfig,
    blom_variance_check,
    drift_estimate_mean,
    estimate,
    estimate_full,
    estimate_zeta,
    krr_moments,
    labeled_points,
    lemma1_sigma,
    lstd_moments,
    make_feature_map,
    make_reward_cont,
    make_reward_mdp,
    phibe_moments,
    run_experiment,
    sample_regression,
    sample_trajectories,
    summarize_boxplot,
)
from replaystat.kernel import default_ridge
from replaystat.rng import DOMAIN_DATA, stream

THREE_SCHEMES = ("full", "u", "v")

# the two-bump surface varies on a 0.2 length scale; this is the width
# that resolves it (the standard-deviation unit of the input marginals)
KRR_BANDWIDTH = 1.0 / math.sqrt(12.0)


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _reduction_stats(report):
    """Median difference, positive fraction, median relative reduction."""
    out = {}
    var_full = np.asarray(report.variance["full"])
    for scheme in ("u", "v"):
        diff = np.asarray(report.variance_diff[scheme])
        out[scheme] = (
            float(np.median(diff)),
            float((diff > 0).mean()),
            float(np.median(diff / var_full)),
        )
    return out


@pytest.fixture(scope="module")
def lstd_run():
    cfg = ExperimentConfig(application="lstd", n=500, M=50, m=50, B=100,
                           k_ratio=0.3, L=2, seed=0, schemes=THREE_SCHEMES)
    start = time.perf_counter()
    report = run_experiment(cfg)
    return report, time.perf_counter() - start


@pytest.fixture(scope="module")
def phibe2_run():
    cfg = ExperimentConfig(application="phibe2", n=500, M=50, m=50, B=100,
                           k_ratio=0.3, L=2, seed=0, schemes=THREE_SCHEMES)
    return run_experiment(cfg)


def test_criterion_01_lstd_variance_reduction(lstd_run):
    report, elapsed = lstd_run
    stats = _reduction_stats(report)
    ok = elapsed < 120.0
    for scheme in ("u", "v"):
        med, frac, _ = stats[scheme]
        ok = ok and med > 0.0 and frac >= 0.80
    detail = (
        f"lstd u med {stats['u'][0]:.3f} frac {stats['u'][1]:.2f}, "
        f"v med {stats['v'][0]:.3f} frac {stats['v'][1]:.2f}, {elapsed:.1f}s"
    )
    _report(1, ok, detail)


def test_criterion_02_phibe2_reduction_beats_lstd(lstd_run, phibe2_run):
    lstd_stats = _reduction_stats(lstd_run[0])
    stats = _reduction_stats(phibe2_run)
    ok = True
    for scheme in ("u", "v"):
        med, frac, rel = stats[scheme]
        ok = ok and med > 0.0 and frac >= 0.80 and rel > lstd_stats[scheme][2]
    detail = (
        f"phibe2 u med {stats['u'][0]:.3f} frac {stats['u'][1]:.2f} "
        f"rel {stats['u'][2]:.4f} (lstd {lstd_stats['u'][2]:.4f}), "
        f"v rel {stats['v'][2]:.4f} (lstd {lstd_stats['v'][2]:.4f})"
    )
    _report(2, ok, detail)


def test_criterion_03_krr_variance_reduction():
    parts = []
    ok = True
    for n in (100, 200):
        cfg = ExperimentConfig(application="krr", n=n, M=100, m=100, B=50,
                               k=10, seed=0, bandwidth=KRR_BANDWIDTH,
                               schemes=THREE_SCHEMES)
        stats = _reduction_stats(run_experiment(cfg))
        for scheme in ("u", "v"):
            med, frac, _ = stats[scheme]
            ok = ok and med > 0.0 and frac >= 0.80
            parts.append(f"n={n} {scheme} med {med:.4f} frac {frac:.2f}")
    _report(3, ok, "krr " + ", ".join(parts))


def test_criterion_04_replay_saves_time_against_the_exact_solver():
    savings = {}
    for n in (200, 250):
        cfg = ExperimentConfig(application="krr", n=n, M=50, m=50, B=50, k=10,
                               seed=0, n_features=16, exact_full=True,
                               timed=True, schemes=THREE_SCHEMES)
        t = run_experiment(cfg).timing_seconds
        savings[n] = {s: t["full"] - t[s] for s in ("u", "v")}
    ok = all(savings[250][s] > 0.0 for s in ("u", "v"))
    ok = ok and all(savings[250][s] > savings[200][s] for s in ("u", "v"))
    detail = (
        f"savings@250 u {savings[250]['u']:.4f}s v {savings[250]['v']:.4f}s, "
        f"@200 u {savings[200]['u']:.4f}s v {savings[200]['v']:.4f}s"
    )
    _report(4, ok, detail)


def test_criterion_05_incomplete_variance_identity():
    mean_problem = MomentMap(
        q=1, g=lambda z: np.ones((1, 1)), f=lambda z: np.array([z])
    )
    start = time.perf_counter()
    rep = blom_variance_check(
        lambda gen, count: gen.standard_normal(count),
        mean_problem, n=8, k=3, B=5, outer_reps=2000, seed=0,
    )
    elapsed = time.perf_counter() - start
    ok = rep.ci_low <= 0.0 <= rep.ci_high and elapsed < 60.0
    _report(5, ok, f"lhs {rep.lhs:.5f} rhs {rep.rhs:.5f} "
                   f"CI [{rep.ci_low:.5f}, {rep.ci_high:.5f}], {elapsed:.1f}s")


def test_criterion_06_plugin_covariance_matches_monte_carlo():
    mm = MomentMap(
        q=1,
        g=lambda z: np.array([[1.0 + z * z]]),
        f=lambda z: np.array([z]),
    )
    n, reps = 2000, 2000
    thetas = np.empty(reps)
    for r in range(reps):
        z = stream(1, DOMAIN_DATA, r).uniform(-1.0, 1.0, n)
        thetas[r] = estimate_full(list(z), mm).theta[0]
    mc = float(np.var(thetas, ddof=1) * n)
    z = stream(2, DOMAIN_DATA).uniform(-1.0, 1.0, n)
    plug = float(lemma1_sigma(list(z), mm).sigma[0, 0])
    rel = abs(mc - plug) / mc
    _report(6, rel < 0.10, f"mc {mc:.5f} plug-in {plug:.5f} rel err {rel:.4f}")


def test_criterion_07_second_order_drift_is_two_orders_better():
    spec = OuSpec(lambda_drift=0.05, sigma=1.0, dt=0.1)
    truth = spec.lambda_drift * 1.0
    err1 = abs(drift_estimate_mean(spec, 1.0, PhibeOrder(1).coefficients) - truth)
    err2 = abs(drift_estimate_mean(spec, 1.0, PhibeOrder(2).coefficients) - truth)
    ok = (
        math.isclose(err1, 1.2521e-4, rel_tol=1e-3)
        and err2 <= 1e-6
        and err1 / err2 >= 100.0
    )
    _report(7, ok, f"first-order {err1:.4e}, second-order {err2:.4e}, "
                   f"ratio {err1 / err2:.0f}")


def test_criterion_08_full_subsets_recover_the_full_estimate():
    n, seed = 100, 0
    basis = FourierBasis(4)
    trajs = sample_trajectories(OuSpec(), InitSpec(), n, 2, seed)
    x, y = sample_regression(RegressionSpec(), n, seed)
    fm = make_feature_map(2, 64, math.sqrt(2.0), seed)
    problems = {
        "lstd": (trajs, lstd_moments(basis, math.exp(-0.1), make_reward_mdp())),
        "phibe2": (trajs, phibe_moments(basis, 0.1, make_reward_cont(), PhibeOrder(2))),
        "krr": (labeled_points(x, y), krr_moments(fm, default_ridge(n))),
    }
    worst = 0.0
    for name, (payloads, mm) in problems.items():
        full = estimate_full(payloads, mm).theta
        cfg = ReplayConfig(scheme="u", n_subsamples=20, subsample_size=n, seed=3)
        sub = estimate(payloads, mm, cfg).theta
        worst = max(worst, float(np.max(np.abs(sub - full))))
    _report(8, worst <= 1e-12, f"max coordinate gap {worst:.2e} over three applications")


def test_criterion_09_scaled_one_overlap_covariance_is_unit():
    mean_problem = MomentMap(
        q=1, g=lambda z: np.ones((1, 1)), f=lambda z: np.array([z])
    )
    parts = []
    ok = True
    for k in (5, 10, 20):
        comp = estimate_zeta(
            lambda gen, count: gen.standard_normal(count),
            mean_problem, c=1, k=k, mc_reps=4000, seed=0,
        )
        val = k * k * float(comp.zeta[0, 0])
        se = k * k * float(comp.std_err[0, 0])
        ok = ok and abs(val - 1.0) <= 3.0 * se
        parts.append(f"k={k}: {val:.3f}+-{se:.3f}")
    _report(9, ok, ", ".join(parts))


def test_criterion_10_replay_does_not_worsen_rmse(lstd_run):
    report, _ = lstd_run
    gap = np.asarray(report.rmse["full"]) - np.asarray(report.rmse["u"])
    baseline = float(np.mean(report.rmse["full"]))
    ok = float(gap.mean()) >= -0.01 * baseline
    fv = summarize_boxplot(gap)
    detail = (
        f"mean gap {gap.mean():.4f} (bound {-0.01 * baseline:.4f}); "
        f"distribution min {fv.minimum:.3f} q1 {fv.q1:.3f} med {fv.median:.3f} "
        f"q3 {fv.q3:.3f} max {fv.maximum:.3f}"
    )
    _report(10, ok, detail)
