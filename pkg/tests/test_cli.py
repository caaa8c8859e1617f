import json

import numpy as np

from replaystat import load_report, read_trajectories
from replaystat.cli import main


def test_no_arguments_prints_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flags_exit_one(capsys):
    assert main(["experiment", "--no-such-flag"]) == 1
    assert main(["simulate", "--kind", "plasma", "--out", "x", "--n", "1"]) == 1


def test_experiment_missing_config_exits_one(tmp_path, capsys):
    assert main(["experiment", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 1


def test_simulate_trajectories_round_trip(tmp_path, capsys):
    out = tmp_path / "trajs.csv"
    code = main(["simulate", "--kind", "trajectories", "--out", str(out),
                 "--n", "4", "--length", "3", "--seed", "5"])
    assert code == 0
    trajs = read_trajectories(out)
    assert len(trajs) == 4 and trajs[0].length == 3


def test_simulate_then_estimate(tmp_path, capsys):
    data = tmp_path / "reg.csv"
    assert main(["simulate", "--kind", "regression", "--out", str(data),
                 "--n", "30", "--seed", "2"]) == 0
    capsys.readouterr()

    out = tmp_path / "estimate.json"
    code = main(["estimate", "--data", str(data), "--application", "krr",
                 "--scheme", "v", "-B", "10", "-k", "5",
                 "--n-features", "16", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {"theta", "used", "skipped", "cond_flag"}
    assert len(payload["theta"]) == 16 and payload["used"] == 10
    printed = json.loads(capsys.readouterr().out)
    assert printed == payload


def test_estimate_lstd_from_simulated_trajectories(tmp_path, capsys):
    data = tmp_path / "trajs.csv"
    assert main(["simulate", "--kind", "trajectories", "--out", str(data),
                 "--n", "20", "--length", "2", "--seed", "1"]) == 0
    capsys.readouterr()
    code = main(["estimate", "--data", str(data), "--application", "lstd",
                 "--scheme", "full", "--harmonics", "2"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["theta"]) == 5


def test_estimate_on_malformed_data_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1.0,oops\n")
    assert main(["estimate", "--data", str(bad), "--application", "krr"]) == 1


def test_experiment_end_to_end(tmp_path, capsys):
    config = {
        "application": "lstd", "n": 8, "M": 3, "m": 5, "B": 6, "k": 3,
        "schemes": ["full", "u", "v"], "seed": 0,
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    assert main(["experiment", "--config", str(cfg_path), "--out", str(out_dir)]) == 0
    report = load_report(out_dir)
    assert report.config.n == 8
    assert np.isfinite(report.variance["full"]).all()

    capsys.readouterr()
    assert main(["report", "--dir", str(out_dir)]) == 0
    text = capsys.readouterr().out
    assert "application: lstd" in text and "scheme u:" in text


def test_experiment_rejects_unknown_config_keys(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"application": "lstd", "bogus": 1}))
    assert main(["experiment", "--config", str(cfg_path),
                 "--out", str(tmp_path / "out")]) == 1


def test_blom_preset_prints_the_identity_report(capsys):
    code = main(["blom", "--reps", "150"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"lhs", "rhs", "ci_low", "ci_high", "reps"}
    assert payload["reps"] == 150
    assert payload["ci_low"] < payload["ci_high"]


def test_zeta_subcommand(capsys):
    code = main(["zeta", "--c", "1", "--k", "3", "--reps", "200"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["c"] == 1 and payload["k"] == 3
    assert np.isfinite(payload["zeta"]).all()


def test_oversized_subsamples_are_bad_input(tmp_path, capsys):
    data = tmp_path / "reg.csv"
    assert main(["simulate", "--kind", "regression", "--out", str(data),
                 "--n", "5", "--seed", "0"]) == 0
    capsys.readouterr()
    code = main(["estimate", "--data", str(data), "--application", "krr",
                 "--scheme", "u", "-B", "4", "-k", "50"])
    assert code == 1


def test_runtime_failures_exit_two(monkeypatch, capsys):
    import replaystat.cli as cli
    from replaystat import CapExceeded

    def boom(args):
        raise CapExceeded("forced runtime failure")

    monkeypatch.setitem(cli._COMMANDS, "zeta", boom)
    assert main(["zeta", "--c", "1", "--k", "2"]) == 2
    assert "forced runtime failure" in capsys.readouterr().err
