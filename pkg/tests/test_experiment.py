import json
import math

import numpy as np
import pytest

import replaystat.experiment as experiment
from replaystat import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    FiveNumber,
    ReplayError,
    Scheme,
    emit_report,
    load_report,
    run_experiment,
    summarize_boxplot,
)

TINY = dict(application="lstd", n=8, M=3, m=5, B=6, k=3, L=2, seed=0,
            schemes=("full", "u", "v"))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(application="dqn", n=5, M=2, m=3, schemes=("full",))
    with pytest.raises(ConfigError):
        ExperimentConfig(application="lstd", n=5, M=2, m=3, schemes=())
    with pytest.raises(ConfigError):
        ExperimentConfig(application="lstd", n=5, M=2, m=3, schemes=("u", "u"), k=2)
    with pytest.raises(ConfigError):
        ExperimentConfig(application="lstd", n=5, M=1, m=3, schemes=("full",))
    # resampled schemes need exactly one of k, k_ratio
    with pytest.raises(ConfigError):
        ExperimentConfig(application="lstd", n=5, M=2, m=3, schemes=("u",))
    with pytest.raises(ConfigError):
        ExperimentConfig(application="lstd", n=5, M=2, m=3, schemes=("u",), k=2, k_ratio=0.5)
    cfg = ExperimentConfig(application="lstd", n=5, M=2, m=3, schemes=("full",))
    assert cfg.subsample_size is None


def test_scheme_order_is_canonical():
    cfg = ExperimentConfig(application="lstd", n=5, M=2, m=3, k=2,
                           schemes=("v", "full", "u"))
    assert cfg.schemes == (Scheme.FULL, Scheme.U_STAT, Scheme.V_STAT)


def test_subsample_size_from_ratio():
    cfg = ExperimentConfig(application="lstd", n=500, M=2, m=3, k_ratio=0.3,
                           schemes=("u",))
    assert cfg.subsample_size == 150
    tiny = ExperimentConfig(application="lstd", n=10, M=2, m=3, k_ratio=0.001,
                            schemes=("u",))
    with pytest.raises(ConfigError):
        tiny.subsample_size


def test_exact_full_defaults_by_application():
    krr = ExperimentConfig(application="krr", n=5, M=2, m=3, schemes=("full",))
    lstd = ExperimentConfig(application="lstd", n=5, M=2, m=3, schemes=("full",))
    assert krr.use_exact_full and not lstd.use_exact_full
    off = ExperimentConfig(application="krr", n=5, M=2, m=3, schemes=("full",),
                           exact_full=False)
    assert not off.use_exact_full


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(**TINY)
    raw = cfg.to_dict()
    assert raw["schema_version"] == 1
    assert ExperimentConfig.from_dict(raw) == cfg

    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    assert ExperimentConfig.from_json(path) == cfg

    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**raw, "typo_key": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**raw, "schema_version": 99})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict([1, 2])


def test_boxplot_summary_uses_interpolated_quartiles():
    fv = summarize_boxplot([1.0, 2.0, 3.0, 4.0])
    assert fv == FiveNumber(1.0, 1.75, 2.5, 3.25, 4.0)
    with pytest.raises(ValueError):
        summarize_boxplot([])


def test_report_structure_on_a_tiny_run():
    report = run_experiment(ExperimentConfig(**TINY))
    assert report.scheme_names() == ["full", "u", "v"]
    assert report.kept == [0, 1, 2] and report.dropped_replications == 0
    for name in report.scheme_names():
        assert report.variance[name].shape == (5,)
        assert report.rmse[name].shape == (3,)
        assert report.pred_mean[name].shape == (5,)
        assert report.ci_normal[name].shape == (2, 5)
        assert report.ci_percentile[name].shape == (2, 5)
        assert name in report.timing_seconds
    assert set(report.variance_diff) == {"u", "v"}
    assert set(report.boxplot) == {"u", "v"}
    np.testing.assert_array_equal(report.test_x, np.linspace(-math.pi, math.pi, 5))


def test_constant_replications_have_zero_variance(monkeypatch):
    # pin every replication to the same data and estimation draws
    monkeypatch.setattr(experiment, "_data_seed", lambda master, rep: 11)
    monkeypatch.setattr(
        experiment, "_estimate_seed",
        lambda master, scheme, rep: 13 + experiment.SCHEME_RANK[scheme],
    )
    report = run_experiment(ExperimentConfig(**TINY))
    for name in report.scheme_names():
        np.testing.assert_array_equal(report.variance[name], np.zeros(5))
        assert np.ptp(report.rmse[name]) == 0.0


def test_two_replication_variance_identity(monkeypatch):
    seeds = {0: 21, 1: 22}
    monkeypatch.setattr(experiment, "_data_seed", lambda master, rep: seeds[rep])
    cfg = ExperimentConfig(**{**TINY, "M": 2, "schemes": ("full",)})
    report = run_experiment(cfg)
    # with M=2, var = (a-b)^2/2 and the 2.5/97.5 band spans 0.95 |a-b|
    v = report.variance["full"]
    spread = report.ci_percentile["full"][1] - report.ci_percentile["full"][0]
    np.testing.assert_allclose(v, (spread / 0.95) ** 2 / 2.0, rtol=1e-10)


def test_full_failures_drop_the_replication(monkeypatch):
    real = experiment.estimate

    def flaky(payloads, moments, rcfg, n_jobs=1, table=None):
        if rcfg.scheme is Scheme.FULL and flaky.calls == 1:
            flaky.calls += 1
            raise ReplayError("forced failure")
        flaky.calls += rcfg.scheme is Scheme.FULL
        return real(payloads, moments, rcfg, n_jobs=n_jobs, table=table)

    flaky.calls = 0
    monkeypatch.setattr(experiment, "estimate", flaky)
    report = run_experiment(ExperimentConfig(**TINY))
    assert report.dropped_replications == 1
    assert report.kept == [0, 2]
    assert report.failures["full"] == 1
    for name in report.scheme_names():
        assert report.rmse[name].shape == (2,)


def test_reports_are_bit_reproducible_across_thread_counts():
    cfg = ExperimentConfig(**{**TINY, "M": 4})
    a = run_experiment(cfg, n_jobs=1)
    b = run_experiment(cfg, n_jobs=4)
    assert a.to_dict() == b.to_dict()


def test_krr_application_uses_the_exact_baseline():
    cfg = ExperimentConfig(application="krr", n=12, M=3, m=4, B=5, k=4,
                           seed=1, n_features=8, schemes=("full", "v"))
    report = run_experiment(cfg)
    assert report.variance_diff["v"].shape == (4,)
    assert np.isfinite(report.variance["full"]).all()


def test_emit_and_load_round_trip(tmp_path):
    report = run_experiment(ExperimentConfig(**TINY))
    written = emit_report(report, tmp_path / "out")
    names = {p.name for p in written}
    assert names == {
        "report.json", "variance_diffs.csv", "rmse.csv", "timings.csv", "boxplot.csv"
    }
    back = load_report(tmp_path / "out")
    assert back.to_dict() == report.to_dict()
    assert back.config == report.config
    # timings survive the csv round trip
    for name in report.scheme_names():
        np.testing.assert_allclose(
            back.timing_seconds[name], report.timing_seconds[name]
        )


def test_report_json_is_deterministic(tmp_path):
    cfg = ExperimentConfig(**TINY)
    emit_report(run_experiment(cfg), tmp_path / "a")
    emit_report(run_experiment(cfg), tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (
        tmp_path / "b" / "report.json"
    ).read_bytes()
