"""Resampled ratio-of-sums estimators over a replay buffer.

Four schemes share one evaluation engine:

* full: a single solve over the whole buffer;
* u: B independent size-k subsets drawn without replacement (the same
  subset may recur across draws);
* v: B rows of k i.i.d. uniform indices (repeats allowed, k may exceed n);
* weighted: B rows of k i.i.d. draws from a user weight vector.

Per-subsample systems that remain singular after the jitter retry are
skipped and counted; the full scheme raises instead.  Accepted solutions
are combined with a compensated mean in subsample-index order, so results
are bit-identical however many worker threads evaluate the block.

For the weighted scheme the default combination is the plain average of
the per-subset values, which targets the estimand under the weighted
distribution itself (self-normalized draws).  The Horvitz-Thompson mode
rescales each subset value by the inverse of its draw probability ratio,
recovering the unweighted target at the cost of weight-ratio variance;
with unit weights both modes coincide with the v scheme exactly.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .buffers import as_buffer
from .exceptions import AllSubsamplesSingular, SingularSystem
from .linalg import kahan_mean, solve_ridge_block
from .moments import MomentMap
from .resampling import u_index_block, v_index_block, weighted_index_block
from .validation import check_positive_int, check_weights

_CHUNK = 128  # solver block size; fixed so chunking never depends on workers


class Scheme(str, Enum):
    FULL = "full"
    U_STAT = "u"
    V_STAT = "v"
    WEIGHTED = "weighted"


def as_scheme(value) -> Scheme:
    if isinstance(value, Scheme):
        return value
    return Scheme(str(value).lower())


@dataclass
class ReplayConfig:
    """Sampling configuration shared by the resampled schemes.

    ``n_subsamples`` is the number of replayed subsets (B); ``subsample_size``
    is the per-subset draw count (k).
    """

    scheme: Scheme = Scheme.FULL
    n_subsamples: int = 1
    subsample_size: int | None = None
    seed: int = 0
    weights: Sequence[float] | None = None
    self_normalized: bool = True

    def __post_init__(self):
        self.scheme = as_scheme(self.scheme)
        check_positive_int(self.n_subsamples, "n_subsamples")
        if self.subsample_size is not None:
            check_positive_int(self.subsample_size, "subsample_size")


@dataclass
class ThetaEstimate:
    """Estimate plus solve diagnostics."""

    theta: np.ndarray
    subsamples_used: int
    subsamples_skipped: int
    max_condition_flagged: bool

    def to_dict(self) -> dict:
        return {
            "theta": [float(v) for v in np.asarray(self.theta)],
            "used": int(self.subsamples_used),
            "skipped": int(self.subsamples_skipped),
            "cond_flag": bool(self.max_condition_flagged),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaEstimate":
        return cls(
            theta=np.asarray(d["theta"], dtype=float),
            subsamples_used=int(d["used"]),
            subsamples_skipped=int(d["skipped"]),
            max_condition_flagged=bool(d["cond_flag"]),
        )


def _solve_block_chunked(table, ridge: float, idx: np.ndarray, n_jobs: int = 1):
    """Evaluate all subsample systems for an index block.

    Chunk boundaries are a fixed function of the block size, and results
    land in preallocated slices, so thread count cannot affect the output.
    """
    B = idx.shape[0]
    q = table.q
    theta = np.empty((B, q))
    used = np.empty(B, dtype=bool)
    jittered = np.empty(B, dtype=bool)
    starts = range(0, B, _CHUNK)

    def run(start: int):
        stop = min(start + _CHUNK, B)
        G, F = table.subset_sums(idx[start:stop])
        theta[start:stop], used[start:stop], jittered[start:stop] = solve_ridge_block(
            G, F, ridge
        )

    if n_jobs and n_jobs > 1 and B > _CHUNK:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return theta, used, jittered


def _finalize(theta, used, jittered, scale=None) -> ThetaEstimate:
    B = used.shape[0]
    n_used = int(used.sum())
    if n_used == 0:
        raise AllSubsamplesSingular(f"all {B} subsamples were singular")
    rows = theta[used]
    if scale is not None:
        rows = rows * scale[used][:, None]
    return ThetaEstimate(
        theta=kahan_mean(iter(rows)),
        subsamples_used=n_used,
        subsamples_skipped=B - n_used,
        max_condition_flagged=bool(jittered[used].any()),
    )


def estimate_full(buffer, moments: MomentMap, table=None) -> ThetaEstimate:
    """Plug-in estimate over the whole buffer.

    Raises SingularSystem if the full-buffer system cannot be solved; a
    failed full estimate invalidates any comparison built on top of it, so
    there is nothing sensible to skip to.

    ``table`` short-circuits the per-element moment pass when the caller
    already built it for the same payloads (the harness shares one table
    across schemes).
    """
    if table is None:
        table = moments.table(as_buffer(buffer).payloads())
    idx = np.arange(table.n, dtype=np.intp)[None, :]
    theta, used, jittered = _solve_block_chunked(table, moments.ridge, idx)
    if not used[0]:
        raise SingularSystem("full-buffer moment system is singular")
    return ThetaEstimate(
        theta=theta[0],
        subsamples_used=1,
        subsamples_skipped=0,
        max_condition_flagged=bool(jittered[0]),
    )


def _require_k(cfg: ReplayConfig) -> int:
    if cfg.subsample_size is None:
        raise ValueError("subsample_size must be set for resampled schemes")
    return cfg.subsample_size


def estimate_resampled_U(buffer, moments: MomentMap, cfg: ReplayConfig, n_jobs: int = 1, table=None) -> ThetaEstimate:
    """Average of the kernel over B without-replacement subsets."""
    if table is None:
        table = moments.table(as_buffer(buffer).payloads())
    k = _require_k(cfg)
    if k > table.n:
        raise ValueError(f"subsample_size={k} exceeds buffer size {table.n}")
    idx = u_index_block(table.n, k, cfg.n_subsamples, cfg.seed)
    return _finalize(*_solve_block_chunked(table, moments.ridge, idx, n_jobs))


def estimate_resampled_V(buffer, moments: MomentMap, cfg: ReplayConfig, n_jobs: int = 1, table=None) -> ThetaEstimate:
    """Average of the kernel over B blocks of k i.i.d. uniform indices."""
    if table is None:
        table = moments.table(as_buffer(buffer).payloads())
    k = _require_k(cfg)
    idx = v_index_block(table.n, k, cfg.n_subsamples, cfg.seed)
    return _finalize(*_solve_block_chunked(table, moments.ridge, idx, n_jobs))


def estimate_resampled_weighted(buffer, moments: MomentMap, cfg: ReplayConfig, n_jobs: int = 1, table=None) -> ThetaEstimate:
    """Average of the kernel over B blocks of k i.i.d. weighted draws."""
    if table is None:
        table = moments.table(as_buffer(buffer).payloads())
    k = _require_k(cfg)
    w = check_weights(cfg.weights, table.n)
    idx = weighted_index_block(w, k, cfg.n_subsamples, cfg.seed)
    theta, used, jittered = _solve_block_chunked(table, moments.ridge, idx, n_jobs)
    scale = None
    if not cfg.self_normalized:
        # Horvitz-Thompson: each subset value is scaled by
        # prod_j 1 / (n p_{i_j}); computed in log space to survive large k
        p = w / w.sum()
        with np.errstate(divide="ignore"):
            logs = -np.log(table.n * p)
        scale = np.exp(logs[idx].sum(axis=1))
    return _finalize(theta, used, jittered, scale)


_DISPATCH = {
    Scheme.U_STAT: estimate_resampled_U,
    Scheme.V_STAT: estimate_resampled_V,
    Scheme.WEIGHTED: estimate_resampled_weighted,
}


def estimate(buffer, moments: MomentMap, cfg: ReplayConfig, n_jobs: int = 1, table=None) -> ThetaEstimate:
    """Dispatch on cfg.scheme."""
    scheme = as_scheme(cfg.scheme)
    if scheme is Scheme.FULL:
        return estimate_full(buffer, moments, table=table)
    return _DISPATCH[scheme](buffer, moments, cfg, n_jobs, table=table)


class ReplayThetaEstimator(BaseEstimator):
    """Estimator-style front end over the scheme functions.

    Parameters mirror ReplayConfig; ``fit`` accepts a ReplayBuffer or any
    sequence of payloads understood by the supplied moment map.

    Attributes after fit: ``theta_``, ``subsamples_used_``,
    ``subsamples_skipped_``, ``condition_flagged_``.
    """

    def __init__(
        self,
        moments: MomentMap | None = None,
        scheme: str = "full",
        n_subsamples: int = 100,
        subsample_size: int | None = None,
        weights=None,
        self_normalized: bool = True,
        random_state: int = 0,
        n_jobs: int | None = None,
    ):
        self.moments = moments
        self.scheme = scheme
        self.n_subsamples = n_subsamples
        self.subsample_size = subsample_size
        self.weights = weights
        self.self_normalized = self_normalized
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> ReplayConfig:
        return ReplayConfig(
            scheme=self.scheme,
            n_subsamples=self.n_subsamples,
            subsample_size=self.subsample_size,
            seed=self.random_state,
            weights=self.weights,
            self_normalized=self.self_normalized,
        )

    def fit(self, X, y=None):
        if self.moments is None:
            raise ValueError("moments must be provided before fitting")
        result = estimate(X, self.moments, self._config(), n_jobs=self.n_jobs or 1)
        self.result_ = result
        self.theta_ = result.theta
        self.subsamples_used_ = result.subsamples_used
        self.subsamples_skipped_ = result.subsamples_skipped
        self.condition_flagged_ = result.max_condition_flagged
        return self
