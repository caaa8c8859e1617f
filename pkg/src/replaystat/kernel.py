"""Kernel ridge regression through the replay estimators.

The moment map for a labeled point (x, y) under a feature map phi is

    g(x, y) = phi(x) phi(x)^T + ridge * I / n_effective    (rank one + ridge)
    f(x, y) = y * phi(x)

except that here the ridge is carried by the solve (see MomentMap.ridge),
so the element moments are the plain rank-one terms.  Because g is rank
one, the dense (n, q, q) cache is never materialized: subset sums reduce
to matmuls against the (n, q) feature matrix.

``exact_krr_oracle`` is the reference predictor that solves the full
n x n Gaussian-kernel system directly.  It exists to cross-check the
random-feature path and deliberately shares no code with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .estimators import ReplayConfig, estimate
from .exceptions import CapExceeded, DimensionMismatch
from .features import FeatureMap, make_feature_map
from .linalg import solve_ridge
from .moments import MomentMap
from .validation import as_design, as_vector

EXACT_SOLVE_CAP = 2000


class LabeledPoint(NamedTuple):
    x: np.ndarray
    y: float


def labeled_points(x, y) -> list[LabeledPoint]:
    """Bundle an (n, p) design and an (n,) response into payloads."""
    arr = np.asarray(x, dtype=float)
    resp = np.asarray(y, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"design must be 2-d, got shape {arr.shape}")
    if resp.shape != (arr.shape[0],):
        raise DimensionMismatch(
            f"response shape {resp.shape} does not match {arr.shape[0]} rows"
        )
    return [LabeledPoint(arr[i], float(resp[i])) for i in range(arr.shape[0])]


class RankOneMomentTable:
    """Cached moments for rank-one g terms.

    Stores the (n, q) feature matrix and the responses; a subset's summed
    moments are P^T P and P^T y over the subset rows.  Matches the dense
    table contract used by the estimators.
    """

    def __init__(self, phi: np.ndarray, y: np.ndarray):
        self.phi = phi
        self.y = y

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def q(self) -> int:
        return self.phi.shape[1]

    def subset_sums(self, idx: np.ndarray):
        rows = self.phi[idx]  # (B, k, q)
        gsum = rows.transpose(0, 2, 1) @ rows
        fsum = np.einsum("bkq,bk->bq", rows, self.y[idx])
        return gsum, fsum


@dataclass(frozen=True)
class RankOneMomentMap(MomentMap):
    """MomentMap whose table skips the (n, q, q) cache."""

    feature_map: FeatureMap = None

    def table(self, payloads) -> RankOneMomentTable:
        xs = np.stack([np.atleast_1d(np.asarray(z.x, dtype=float)) for z in payloads])
        ys = np.array([float(z.y) for z in payloads])
        return RankOneMomentTable(self.feature_map.transform(xs), ys)


def krr_moments(feature_map: FeatureMap, ridge: float) -> RankOneMomentMap:
    """Ridge-regression moment map over LabeledPoint payloads."""

    def g(z: LabeledPoint) -> np.ndarray:
        phi = feature_map.transform(np.atleast_1d(np.asarray(z.x, dtype=float)))
        return np.outer(phi, phi)

    def f(z: LabeledPoint) -> np.ndarray:
        phi = feature_map.transform(np.atleast_1d(np.asarray(z.x, dtype=float)))
        return float(z.y) * phi

    return RankOneMomentMap(q=feature_map.q, g=g, f=f, ridge=ridge, feature_map=feature_map)


def default_ridge(n: int) -> float:
    """Regularization level n^(-2/3) used by both regression paths."""
    return float(n) ** (-2.0 / 3.0)


def krr_predict(theta, feature_map: FeatureMap, x) -> np.ndarray:
    """Predictions of the random-feature model at new inputs."""
    th = as_vector(theta, feature_map.q, "theta")
    return feature_map.transform(x) @ th


def gaussian_gram(a, b, bandwidth: float) -> np.ndarray:
    """exp(-||a_i - b_j||^2 / (2 bandwidth^2)) for row pairs."""
    left = np.asarray(a, dtype=float)
    right = np.asarray(b, dtype=float)
    sq = (
        np.sum(left * left, axis=1)[:, None]
        - 2.0 * (left @ right.T)
        + np.sum(right * right, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * bandwidth * bandwidth))


def split_points(points):
    """Unzip a sequence of labeled points into design and response arrays."""
    xs = [np.atleast_1d(np.asarray(z.x, dtype=float)) for z in points]
    ys = [float(z.y) for z in points]
    if not xs:
        raise DimensionMismatch("at least one labeled point is required")
    return np.stack(xs), np.array(ys)


def exact_krr_oracle(points, bandwidth: float, ridge: float, test_x) -> np.ndarray:
    """Reference predictor solving the full kernel system.

    Refuses designs beyond EXACT_SOLVE_CAP rows; the cubic solve is the
    whole point of avoiding this path at scale.
    """
    arr, resp = split_points(points)
    if arr.shape[0] > EXACT_SOLVE_CAP:
        raise CapExceeded(f"exact solve capped at {EXACT_SOLVE_CAP} rows, got {arr.shape[0]}")
    gram = gaussian_gram(arr, arr, bandwidth)
    coef, _ = solve_ridge(gram, resp, ridge)
    test = np.asarray(test_x, dtype=float)
    squeeze = test.ndim == 1
    if squeeze:
        test = test[None, :]
    pred = gaussian_gram(test, arr, bandwidth) @ coef
    return pred[0] if squeeze else pred


class ReplayKernelRidge(BaseEstimator, RegressorMixin):
    """Random-feature kernel ridge fitted by subsample averaging."""

    def __init__(
        self,
        n_features: int = 256,
        bandwidth: float | None = None,
        alpha: float | None = None,
        scheme: str = "v",
        n_subsamples: int = 50,
        subsample_size: int | None = 10,
        weights=None,
        self_normalized: bool = True,
        random_state: int = 0,
        n_jobs: int | None = None,
    ):
        self.n_features = n_features
        self.bandwidth = bandwidth
        self.alpha = alpha
        self.scheme = scheme
        self.n_subsamples = n_subsamples
        self.subsample_size = subsample_size
        self.weights = weights
        self.self_normalized = self_normalized
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        arr = as_design(X, name="X")
        resp = as_vector(y, arr.shape[0], "y")
        n, p = arr.shape
        bandwidth = self.bandwidth if self.bandwidth is not None else math.sqrt(p)
        ridge = self.alpha if self.alpha is not None else default_ridge(n)
        fm = make_feature_map(p, self.n_features, bandwidth, self.random_state)
        moments = krr_moments(fm, ridge)
        cfg = ReplayConfig(
            scheme=self.scheme,
            n_subsamples=self.n_subsamples,
            subsample_size=self.subsample_size,
            seed=self.random_state,
            weights=self.weights,
            self_normalized=self.self_normalized,
        )
        result = estimate(labeled_points(arr, resp), moments, cfg, n_jobs=self.n_jobs or 1)
        self.feature_map_ = fm
        self.result_ = result
        self.theta_ = result.theta
        return self

    def predict(self, X):
        return krr_predict(self.theta_, self.feature_map_, X)


class ExactKernelRidge(BaseEstimator, RegressorMixin):
    """Full Gaussian-kernel ridge regression, for cross-checking."""

    def __init__(self, bandwidth: float | None = None, alpha: float | None = None):
        self.bandwidth = bandwidth
        self.alpha = alpha

    def fit(self, X, y):
        arr = as_design(X, name="X")
        resp = as_vector(y, arr.shape[0], "y")
        n, p = arr.shape
        self.bandwidth_ = self.bandwidth if self.bandwidth is not None else math.sqrt(p)
        self.alpha_ = self.alpha if self.alpha is not None else default_ridge(n)
        if n > EXACT_SOLVE_CAP:
            raise CapExceeded(f"exact solve capped at {EXACT_SOLVE_CAP} rows, got {n}")
        gram = gaussian_gram(arr, arr, self.bandwidth_)
        coef, _ = solve_ridge(gram, resp, self.alpha_)
        self.x_train_ = arr
        self.coef_ = coef
        return self

    def predict(self, X):
        test = as_design(X, cols=self.x_train_.shape[1], name="X")
        return gaussian_gram(test, self.x_train_, self.bandwidth_) @ self.coef_
