"""Replicated benchmark studies over the three applications.

``run_experiment`` repeats the same study M times: draw a fresh dataset,
fit every enabled scheme, predict at a fixed set of test points.  It then
aggregates per-test-point prediction variances (and their differences
against the full-data baseline), per-replication RMSE against the known
target, and wall-clock fit times.

Seed discipline: replication r draws data from a stream keyed by
(master, data-domain, r); scheme s in replication r estimates with a seed
keyed by (master, estimate-domain, scheme-rank, r).  Scheme ranks are
fixed for all time, so enabling or disabling one scheme never changes
another's output.  Reports are bit-reproducible from the config alone,
which is why wall-clock timings live in their own CSV and never enter
report.json.

The regression application uses the exact-kernel solver as its full-data
baseline by default (exact_full): that is the method replay is being
compared against, for both variance and cost.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .environments import (
    InitSpec,
    OuSpec,
    RegressionSpec,
    make_reward_cont,
    make_reward_mdp,
    mdp_test_grid,
    sample_regression,
    sample_trajectories,
    true_value,
    two_bump_surface,
)
from .estimators import ReplayConfig, Scheme, as_scheme, estimate
from .exceptions import ConfigError, ReplayError
from .features import make_feature_map
from .fourier import FourierBasis
from .kernel import ExactKernelRidge, default_ridge, krr_moments, krr_predict, labeled_points
from .policy_eval import PhibeOrder, lstd_moments, phibe_moments, value_predict

SCHEMA_VERSION = 1
APPLICATIONS = ("lstd", "phibe1", "phibe2", "krr")
SCHEME_RANK = {Scheme.FULL: 0, Scheme.U_STAT: 1, Scheme.V_STAT: 2, Scheme.WEIGHTED: 3}

_CONFIG_KEYS = {
    "schema_version",
    "application",
    "n",
    "L",
    "m",
    "M",
    "schemes",
    "B",
    "k",
    "k_ratio",
    "seed",
    "drift",
    "sigma",
    "beta",
    "dt",
    "harmonics",
    "n_features",
    "bandwidth",
    "ridge",
    "noise_sd",
    "exact_full",
    "timed",
}


@dataclass(frozen=True)
class ExperimentConfig:
    application: str
    n: int
    M: int
    m: int
    schemes: tuple[Scheme, ...]
    B: int = 100
    k: int | None = None
    k_ratio: float | None = None
    L: int = 2
    seed: int = 0
    drift: float = 0.05
    sigma: float = 1.0
    beta: float = 0.1
    dt: float = 0.1
    harmonics: int = 4
    n_features: int = 256
    bandwidth: float | None = None
    ridge: float | None = None
    noise_sd: float = 0.5
    exact_full: bool | None = None
    timed: bool = False

    def __post_init__(self):
        if self.application not in APPLICATIONS:
            raise ConfigError(
                f"application must be one of {APPLICATIONS}, got {self.application!r}"
            )
        schemes = tuple(as_scheme(s) for s in self.schemes)
        if not schemes:
            raise ConfigError("at least one scheme is required")
        if len(set(schemes)) != len(schemes):
            raise ConfigError("duplicate schemes in config")
        object.__setattr__(
            self, "schemes", tuple(sorted(schemes, key=SCHEME_RANK.__getitem__))
        )
        for name, low in (("n", 1), ("M", 2), ("m", 1), ("B", 1), ("L", 1)):
            value = getattr(self, name)
            if not (isinstance(value, (int, np.integer)) and value >= low):
                raise ConfigError(f"{name} must be an integer >= {low}, got {value!r}")
        needs_k = any(s is not Scheme.FULL for s in self.schemes)
        if needs_k and (self.k is None) == (self.k_ratio is None):
            raise ConfigError("set exactly one of k or k_ratio")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.k_ratio is not None and not 0.0 < self.k_ratio:
            raise ConfigError(f"k_ratio must be positive, got {self.k_ratio}")

    @property
    def subsample_size(self) -> int | None:
        if self.k is not None:
            return int(self.k)
        if self.k_ratio is not None:
            k = int(round(self.k_ratio * self.n))
            if k < 1:
                raise ConfigError(f"k_ratio {self.k_ratio} gives empty subsets at n={self.n}")
            return k
        return None

    @property
    def use_exact_full(self) -> bool:
        if self.exact_full is None:
            return self.application == "krr"
        return bool(self.exact_full)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "schemes":
                value = [s.value for s in value]
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be a JSON object, got {type(raw).__name__}")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        version = raw.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}")
        kwargs = {k: v for k, v in raw.items() if k != "schema_version"}
        if "schemes" in kwargs:
            kwargs["schemes"] = tuple(as_scheme(s) for s in kwargs["schemes"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw)


@dataclass(frozen=True)
class FiveNumber:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def summarize_boxplot(values) -> FiveNumber:
    """Five-number summary with linear-interpolation quartiles."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty array")
    lo, q1, med, q3, hi = np.percentile(arr, [0, 25, 50, 75, 100])
    return FiveNumber(float(lo), float(q1), float(med), float(q3), float(hi))


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    test_x: np.ndarray
    truth: np.ndarray
    kept: list[int]
    dropped_replications: int
    variance: dict[str, np.ndarray]
    variance_diff: dict[str, np.ndarray]
    rmse: dict[str, np.ndarray]
    pred_mean: dict[str, np.ndarray]
    ci_normal: dict[str, np.ndarray]
    ci_percentile: dict[str, np.ndarray]
    boxplot: dict[str, FiveNumber]
    failures: dict[str, int]
    skipped_subsamples: dict[str, int]
    condition_flags: dict[str, int]
    timing_seconds: dict[str, float] = field(default_factory=dict)

    def scheme_names(self) -> list[str]:
        return [s.value for s in self.config.schemes]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "test_x": self.test_x.tolist(),
            "truth": self.truth.tolist(),
            "kept": list(self.kept),
            "dropped_replications": self.dropped_replications,
            "variance": {k: v.tolist() for k, v in self.variance.items()},
            "variance_diff": {k: v.tolist() for k, v in self.variance_diff.items()},
            "rmse": {k: v.tolist() for k, v in self.rmse.items()},
            "pred_mean": {k: v.tolist() for k, v in self.pred_mean.items()},
            "ci_normal": {k: v.tolist() for k, v in self.ci_normal.items()},
            "ci_percentile": {k: v.tolist() for k, v in self.ci_percentile.items()},
            "boxplot": {k: v.to_dict() for k, v in self.boxplot.items()},
            "failures": dict(self.failures),
            "skipped_subsamples": dict(self.skipped_subsamples),
            "condition_flags": dict(self.condition_flags),
        }

    @classmethod
    def from_dict(cls, raw: dict, timing_seconds: dict | None = None) -> "ExperimentReport":
        return cls(
            config=ExperimentConfig.from_dict(raw["config"]),
            test_x=np.asarray(raw["test_x"], dtype=float),
            truth=np.asarray(raw["truth"], dtype=float),
            kept=[int(i) for i in raw["kept"]],
            dropped_replications=int(raw["dropped_replications"]),
            variance={k: np.asarray(v, dtype=float) for k, v in raw["variance"].items()},
            variance_diff={
                k: np.asarray(v, dtype=float) for k, v in raw["variance_diff"].items()
            },
            rmse={k: np.asarray(v, dtype=float) for k, v in raw["rmse"].items()},
            pred_mean={k: np.asarray(v, dtype=float) for k, v in raw["pred_mean"].items()},
            ci_normal={k: np.asarray(v, dtype=float) for k, v in raw["ci_normal"].items()},
            ci_percentile={
                k: np.asarray(v, dtype=float) for k, v in raw["ci_percentile"].items()
            },
            boxplot={k: FiveNumber(**v) for k, v in raw["boxplot"].items()},
            failures={k: int(v) for k, v in raw["failures"].items()},
            skipped_subsamples={
                k: int(v) for k, v in raw["skipped_subsamples"].items()
            },
            condition_flags={k: int(v) for k, v in raw["condition_flags"].items()},
            timing_seconds=dict(timing_seconds or {}),
        )


class _Study:
    """Application wiring: data generation, moment map, predictor, truth."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        if cfg.application == "krr":
            self.reg_spec = RegressionSpec(noise_sd=cfg.noise_sd)
            self.bandwidth = cfg.bandwidth if cfg.bandwidth is not None else math.sqrt(2.0)
            self.ridge = cfg.ridge if cfg.ridge is not None else default_ridge(cfg.n)
            self.feature_map = make_feature_map(2, cfg.n_features, self.bandwidth, cfg.seed)
            self.moments = krr_moments(self.feature_map, self.ridge)
            self.test_x, _ = sample_regression(self.reg_spec, cfg.m, cfg.seed, role="test")
            self.truth = two_bump_surface(self.test_x)
        else:
            self.ou_spec = OuSpec(lambda_drift=cfg.drift, sigma=cfg.sigma, dt=cfg.dt)
            self.init_spec = InitSpec()
            self.basis = FourierBasis(cfg.harmonics)
            if cfg.application == "lstd":
                # per-step discount preset is exp(-beta); dt enters through the
                # reward scale, not the discount
                gamma = math.exp(-cfg.beta)
                reward = make_reward_mdp(cfg.drift, cfg.sigma, cfg.beta, cfg.dt)
                self.moments = lstd_moments(self.basis, gamma, reward)
            else:
                order = PhibeOrder(1 if cfg.application == "phibe1" else 2)
                reward = make_reward_cont(cfg.drift, cfg.sigma, cfg.beta)
                self.moments = phibe_moments(self.basis, cfg.beta, reward, order)
            if cfg.ridge is not None:
                self.moments = dataclasses.replace(self.moments, ridge=cfg.ridge)
            self.test_x = mdp_test_grid(cfg.m)
            self.truth = true_value(self.test_x)

    def dataset(self, data_seed: int):
        if self.cfg.application == "krr":
            x, y = sample_regression(self.reg_spec, self.cfg.n, data_seed, role="train")
            return labeled_points(x, y)
        return sample_trajectories(
            self.ou_spec, self.init_spec, self.cfg.n, self.cfg.L, data_seed
        )

    def predict(self, theta: np.ndarray) -> np.ndarray:
        if self.cfg.application == "krr":
            return krr_predict(theta, self.feature_map, self.test_x)
        return value_predict(theta, self.basis, self.test_x)

    def exact_design(self, payloads):
        return np.stack([p.x for p in payloads]), np.array([p.y for p in payloads])

    def fit_exact_full(self, xs, ys):
        model = ExactKernelRidge(bandwidth=self.bandwidth, alpha=self.ridge)
        model.fit(xs, ys)
        return model


def _data_seed(master: int, rep: int) -> int:
    return rng.substream_seed(master, rng.DOMAIN_DATA, rep)


def _estimate_seed(master: int, scheme: Scheme, rep: int) -> int:
    return rng.substream_seed(master, rng.DOMAIN_ESTIMATE, SCHEME_RANK[scheme], rep)


def run_experiment(cfg: ExperimentConfig, n_jobs: int = 1) -> ExperimentReport:
    study = _Study(cfg)
    if cfg.timed:
        n_jobs = 1
    m = cfg.m
    names = [s.value for s in cfg.schemes]
    preds = {s: np.full((cfg.M, m), np.nan) for s in names}
    ok = {s: np.zeros(cfg.M, dtype=bool) for s in names}
    timing = {s: 0.0 for s in names}
    skipped = {s: 0 for s in names}
    flags = {s: 0 for s in names}

    needs_table = any(
        not (s is Scheme.FULL and cfg.use_exact_full) for s in cfg.schemes
    )
    for rep in range(cfg.M):
        payloads = study.dataset(_data_seed(cfg.seed, rep))
        # marshalling stays outside the timers: the timing contract covers
        # estimation (index draws, moment sums, solves), and the moment
        # table is identical across schemes
        table = study.moments.table(payloads) if needs_table else None
        if cfg.use_exact_full and Scheme.FULL in cfg.schemes:
            exact_xs, exact_ys = study.exact_design(payloads)
        for scheme in cfg.schemes:
            name = scheme.value
            try:
                if scheme is Scheme.FULL and cfg.use_exact_full:
                    start = time.perf_counter()
                    model = study.fit_exact_full(exact_xs, exact_ys)
                    timing[name] += time.perf_counter() - start
                    preds[name][rep] = model.predict(study.test_x)
                else:
                    rcfg = ReplayConfig(
                        scheme=scheme,
                        n_subsamples=cfg.B,
                        subsample_size=(
                            None if scheme is Scheme.FULL else cfg.subsample_size
                        ),
                        seed=_estimate_seed(cfg.seed, scheme, rep),
                        weights=(
                            np.ones(cfg.n) if scheme is Scheme.WEIGHTED else None
                        ),
                    )
                    start = time.perf_counter()
                    result = estimate(
                        payloads, study.moments, rcfg, n_jobs=n_jobs, table=table
                    )
                    timing[name] += time.perf_counter() - start
                    preds[name][rep] = study.predict(result.theta)
                    skipped[name] += result.subsamples_skipped
                    flags[name] += int(result.max_condition_flagged)
            except ReplayError:
                continue
            ok[name][rep] = True

    full_name = Scheme.FULL.value
    if full_name in ok:
        kept_mask = ok[full_name]
    else:
        kept_mask = np.ones(cfg.M, dtype=bool)
    kept = [int(i) for i in np.flatnonzero(kept_mask)]
    dropped = int(cfg.M - len(kept))

    variance: dict[str, np.ndarray] = {}
    variance_diff: dict[str, np.ndarray] = {}
    rmse: dict[str, np.ndarray] = {}
    pred_mean: dict[str, np.ndarray] = {}
    ci_normal: dict[str, np.ndarray] = {}
    ci_percentile: dict[str, np.ndarray] = {}
    boxplot: dict[str, FiveNumber] = {}
    failures = {s: int(cfg.M - ok[s].sum()) for s in names}

    for name in names:
        rows = preds[name][kept_mask & ok[name]]
        # variances from rows shifted by the first replication: constant
        # predictions then give exactly zero instead of rounding residue
        shifted = rows - rows[0] if rows.shape[0] else rows
        if rows.shape[0] >= 2:
            variance[name] = np.var(shifted, axis=0, ddof=1)
        else:
            variance[name] = np.full(m, np.nan)
        if rows.shape[0] >= 1:
            pred_mean[name] = rows.mean(axis=0)
            sd = np.sqrt(variance[name]) if rows.shape[0] >= 2 else np.zeros(m)
            half = 1.96 * sd / math.sqrt(rows.shape[0])
            ci_normal[name] = np.vstack([pred_mean[name] - half, pred_mean[name] + half])
            ci_percentile[name] = np.percentile(rows, [2.5, 97.5], axis=0)
        else:
            pred_mean[name] = np.full(m, np.nan)
            ci_normal[name] = np.full((2, m), np.nan)
            ci_percentile[name] = np.full((2, m), np.nan)
        err = preds[name][kept_mask] - study.truth[None, :]
        rmse[name] = np.sqrt(np.mean(err * err, axis=1))

    for name in names:
        if name == full_name or full_name not in variance:
            continue
        diff = variance[full_name] - variance[name]
        variance_diff[name] = diff
        finite = diff[np.isfinite(diff)]
        if finite.size:
            boxplot[name] = summarize_boxplot(finite)

    return ExperimentReport(
        config=cfg,
        test_x=np.asarray(study.test_x, dtype=float),
        truth=np.asarray(study.truth, dtype=float),
        kept=kept,
        dropped_replications=dropped,
        variance=variance,
        variance_diff=variance_diff,
        rmse=rmse,
        pred_mean=pred_mean,
        ci_normal=ci_normal,
        ci_percentile=ci_percentile,
        boxplot=boxplot,
        failures=failures,
        skipped_subsamples=skipped,
        condition_flags=flags,
        timing_seconds=timing,
    )


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fields = [
                str(v) if isinstance(v, (int, str)) else f"{v:.17g}" for v in row
            ]
            fh.write(",".join(fields) + "\n")


def emit_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write report.json plus the tabular views; returns the paths written.

    report.json is bit-reproducible from the config; timings go to
    timings.csv only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "report.json"
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)

    names = report.scheme_names()
    diff_names = [n for n in report.variance_diff]
    header = ["test_index"] + [f"var_{n}" for n in names] + [f"diff_{n}" for n in diff_names]
    rows = []
    for j in range(report.truth.size):
        row = [j]
        row += [report.variance[n][j] for n in names]
        row += [report.variance_diff[n][j] for n in diff_names]
        rows.append(row)
    path = out / "variance_diffs.csv"
    _write_csv(path, header, rows)
    written.append(path)

    header = ["rep"] + [f"rmse_{n}" for n in names]
    rows = []
    for pos, rep in enumerate(report.kept):
        rows.append([rep] + [report.rmse[n][pos] for n in names])
    path = out / "rmse.csv"
    _write_csv(path, header, rows)
    written.append(path)

    path = out / "timings.csv"
    _write_csv(
        path,
        ["scheme", "seconds"],
        [[n, report.timing_seconds.get(n, float("nan"))] for n in names],
    )
    written.append(path)

    path = out / "boxplot.csv"
    _write_csv(
        path,
        ["scheme", "min", "q1", "median", "q3", "max"],
        [
            [n, fv.minimum, fv.q1, fv.median, fv.q3, fv.maximum]
            for n, fv in report.boxplot.items()
        ],
    )
    written.append(path)
    return written


def load_report(out_dir) -> ExperimentReport:
    """Rebuild a report from emit_report's outputs (including timings)."""
    out = Path(out_dir)
    with open(out / "report.json") as fh:
        raw = json.load(fh)
    timings = {}
    timing_path = out / "timings.csv"
    if timing_path.exists():
        with open(timing_path) as fh:
            next(fh)
            for line in fh:
                if not line.strip():
                    continue
                name, value = line.strip().split(",")
                timings[name] = float(value)
    return ExperimentReport.from_dict(raw, timing_seconds=timings)
