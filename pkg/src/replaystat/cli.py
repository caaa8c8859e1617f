"""Command-line front end.

Subcommands:

* simulate    write trajectory or regression data files
* estimate    run one estimation scheme over a data file
* experiment  run a replicated study from a JSON config
* zeta        shared-argument covariance diagnostic (scalar mean problem)
* blom        finite-sample variance-identity check (scalar mean problem)
* report      summarize an emitted experiment directory

Exit codes: 0 success, 1 bad input (usage, config, malformed data),
2 runtime failure (singular systems, caps, IO trouble mid-run).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .diagnostics import blom_variance_check, estimate_zeta
from .environments import (
    make_reward_cont,
    make_reward_mdp,
    ingest_csv,
    InitSpec,
    OuSpec,
    RegressionSpec,
    sample_regression,
    sample_trajectories,
    write_regression_csv,
)
from .estimators import ReplayConfig, Scheme, as_scheme, estimate
from .exceptions import ReplayError
from .experiment import ExperimentConfig, emit_report, load_report, run_experiment
from .features import make_feature_map
from .fourier import FourierBasis
from .kernel import default_ridge, krr_moments, labeled_points
from .moments import MomentMap
from .policy_eval import PhibeOrder, lstd_moments, phibe_moments
from .trajectories import read_trajectories, write_trajectories

_MEAN_PROBLEM = MomentMap(
    q=1,
    g=lambda z: np.ones((1, 1)),
    f=lambda z: np.array([float(z)]),
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract here is exit 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="replaystat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="write trajectory or regression data files")
    p.add_argument("--kind", choices=["trajectories", "regression"], required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--n", type=int, required=True, help="number of trajectories/points")
    p.add_argument("--length", type=int, default=2, help="transitions per trajectory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drift", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--noise-sd", type=float, default=0.5)

    p = sub.add_parser("estimate", help="run one scheme over a data file")
    p.add_argument("--data", required=True, help="trajectory or regression CSV")
    p.add_argument(
        "--application", choices=["lstd", "phibe1", "phibe2", "krr"], required=True
    )
    p.add_argument("--scheme", default="full", help="full, u, v, or weighted")
    p.add_argument("--n-subsamples", "-B", dest="B", type=int, default=100)
    p.add_argument("--subsample-size", "-k", dest="k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--harmonics", type=int, default=4)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--drift", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n-features", type=int, default=256)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="write the estimate JSON here")

    p = sub.add_parser("experiment", help="run a replicated study from a JSON config")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timed", action="store_true", help="force sequential timing runs")

    p = sub.add_parser("zeta", help="shared-argument covariance of the scalar mean problem")
    p.add_argument("--c", type=int, required=True, help="shared-argument count")
    p.add_argument("--k", type=int, required=True, help="kernel order")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("blom", help="variance-identity check on the scalar mean problem")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n-subsamples", "-B", dest="B", type=int, default=5)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="summarize an emitted experiment directory")
    p.add_argument("--dir", required=True)
    return parser


def _cmd_simulate(args) -> int:
    if args.kind == "trajectories":
        spec = OuSpec(lambda_drift=args.drift, sigma=args.sigma, dt=args.dt)
        trajs = sample_trajectories(spec, InitSpec(), args.n, args.length, args.seed)
        write_trajectories(args.out, trajs)
    else:
        x, y = sample_regression(RegressionSpec(noise_sd=args.noise_sd), args.n, args.seed)
        write_regression_csv(args.out, x, y)
    print(args.out)
    return 0


def _estimate_inputs(args):
    if args.application == "krr":
        x, y = ingest_csv(args.data)
        bandwidth = args.bandwidth if args.bandwidth is not None else math.sqrt(x.shape[1])
        ridge = args.ridge if args.ridge is not None else default_ridge(x.shape[0])
        fm = make_feature_map(x.shape[1], args.n_features, bandwidth, args.seed)
        return labeled_points(x, y), krr_moments(fm, ridge)
    trajs = read_trajectories(args.data)
    basis = FourierBasis(args.harmonics)
    dt = trajs[0].dt
    if args.application == "lstd":
        reward = make_reward_mdp(args.drift, args.sigma, args.beta, dt)
        return trajs, lstd_moments(basis, math.exp(-args.beta), reward)
    order = PhibeOrder(1 if args.application == "phibe1" else 2)
    reward = make_reward_cont(args.drift, args.sigma, args.beta)
    return trajs, phibe_moments(basis, args.beta, reward, order)


def _cmd_estimate(args) -> int:
    payloads, moments = _estimate_inputs(args)
    scheme = as_scheme(args.scheme)
    cfg = ReplayConfig(
        scheme=scheme,
        n_subsamples=args.B,
        subsample_size=args.k,
        seed=args.seed,
        weights=np.ones(len(payloads)) if scheme is Scheme.WEIGHTED else None,
    )
    result = estimate(payloads, moments, cfg, n_jobs=args.threads)
    text = json.dumps(result.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.timed and not cfg.timed:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "timed": True})
    report = run_experiment(cfg, n_jobs=args.threads)
    for path in emit_report(report, args.out):
        print(path)
    return 0


def _normal_draws(gen: np.random.Generator, count: int) -> np.ndarray:
    return gen.standard_normal(count)


def _cmd_zeta(args) -> int:
    comp = estimate_zeta(_normal_draws, _MEAN_PROBLEM, args.c, args.k, args.reps, args.seed)
    print(
        json.dumps(
            {
                "c": comp.c,
                "k": comp.k,
                "zeta": comp.zeta.tolist(),
                "std_err": comp.std_err.tolist(),
                "reps": comp.mc_reps,
            },
            indent=2,
        )
    )
    return 0


def _cmd_blom(args) -> int:
    report = blom_variance_check(
        _normal_draws, _MEAN_PROBLEM, args.n, args.k, args.B, args.reps, args.seed
    )
    print(report.to_json())
    return 0


def _cmd_report(args) -> int:
    report = load_report(args.dir)
    cfg = report.config
    print(f"application: {cfg.application}  n={cfg.n}  M={cfg.M}  m={cfg.m}")
    print(f"kept replications: {len(report.kept)} (dropped {report.dropped_replications})")
    for name in report.scheme_names():
        parts = [f"scheme {name}:"]
        if name in report.variance_diff:
            parts.append(f"median var diff {np.median(report.variance_diff[name]):.6g}")
        finite = report.rmse[name][np.isfinite(report.rmse[name])]
        if finite.size:
            parts.append(f"mean rmse {finite.mean():.6g}")
        if name in report.timing_seconds:
            parts.append(f"time {report.timing_seconds[name]:.3f}s")
        print("  " + "  ".join(parts))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "experiment": _cmd_experiment,
    "zeta": _cmd_zeta,
    "blom": _cmd_blom,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ReplayError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
