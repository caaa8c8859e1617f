"""Policy evaluation as moment maps over trajectories.

Two constructions produce the per-trajectory moments consumed by the
replay estimators:

* ``lstd_moments``: the discounted temporal-difference system.  For each
  transition s_j -> s_{j+1} the matrix term is the outer product of the
  features at s_j with (features at s_j minus gamma times features at
  s_{j+1}); the vector term weights the features by the reward at s_j.

* ``phibe_moments``: the continuous-time counterpart.  The generator of
  the state process is estimated per step by finite differences of order
  alpha (drift mu-bar and squared-increment sigma-bar), and the matrix
  term pairs the features with beta * phi - (mu-bar phi' + sigma-bar/2 phi'').

Per-trajectory sums are accumulated with np.add.reduce over the step axis,
so a trajectory's moments equal the sum of the moments of its length-2
windows exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .estimators import ReplayConfig, estimate
from .exceptions import IndexOutOfRange, TrajectoryTooShort
from .fourier import FourierBasis
from .moments import MomentMap
from .trajectories import Trajectory
from .validation import as_vector

_PHIBE_COEFFS = {1: (1.0,), 2: (2.0, -0.5)}


@dataclass(frozen=True)
class PhibeOrder:
    """Finite-difference order for the generator estimates."""

    alpha: int = 2

    def __post_init__(self):
        if self.alpha not in _PHIBE_COEFFS:
            raise ValueError(f"alpha must be one of {sorted(_PHIBE_COEFFS)}, got {self.alpha}")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(_PHIBE_COEFFS[self.alpha])


@dataclass(frozen=True)
class DiscountSpec:
    """Either a per-step factor gamma in (0, 1) or a continuous rate beta > 0."""

    gamma: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if (self.gamma is None) == (self.beta is None):
            raise ValueError("set exactly one of gamma (per-step) or beta (continuous)")
        if self.gamma is not None and not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.beta is not None and not self.beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    @classmethod
    def per_step(cls, gamma: float) -> "DiscountSpec":
        return cls(gamma=gamma)

    @classmethod
    def continuous(cls, beta: float) -> "DiscountSpec":
        return cls(beta=beta)

    def factor(self, dt: float) -> float:
        """Per-step discount over one step of size dt."""
        if self.gamma is not None:
            return self.gamma
        return math.exp(-self.beta * dt)


def lstd_moments(basis: FourierBasis, gamma: float, reward) -> MomentMap:
    """Temporal-difference moment map over Trajectory payloads.

    ``reward`` maps states to rewards and must broadcast over arrays.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")

    def g(traj: Trajectory) -> np.ndarray:
        if traj.length < 1:
            raise TrajectoryTooShort("temporal differences need at least 1 transition")
        phi = basis.features(traj.states)
        diff = phi[:-1] - gamma * phi[1:]
        return np.add.reduce(phi[:-1][:, :, None] * diff[:, None, :], axis=0)

    def f(traj: Trajectory) -> np.ndarray:
        phi = basis.features(traj.states[:-1])
        r = np.asarray(reward(traj.states[:-1]), dtype=float)
        return np.add.reduce(r[:, None] * phi, axis=0)

    return MomentMap(q=basis.q, g=g, f=f)


def phibe_mu_sigma(traj: Trajectory, j: int, order: PhibeOrder):
    """Finite-difference drift and squared-increment estimates at step j.

    mu_bar = (1/dt) sum_k a_k (s_{j+k} - s_j)
    sigma_bar uses the squared increments with the same coefficients.
    """
    a = order.coefficients
    alpha = order.alpha
    if j < 0 or j + alpha > traj.length:
        raise IndexOutOfRange(
            f"step {j} with lookahead {alpha} exceeds trajectory of length {traj.length}"
        )
    d = traj.states[j + 1 : j + alpha + 1] - traj.states[j]
    mu_bar = float(a @ d) / traj.dt
    sigma_bar = float(a @ (d * d)) / traj.dt
    return mu_bar, sigma_bar


def phibe_moments(basis: FourierBasis, beta: float, reward, order: PhibeOrder) -> MomentMap:
    """Generator-based moment map over Trajectory payloads.

    Steps j = 0 .. L - alpha contribute; shorter trajectories are rejected.
    """
    if not beta > 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")

    def _head(traj: Trajectory) -> int:
        usable = traj.length - order.alpha + 1
        if usable < 1:
            raise TrajectoryTooShort(
                f"order {order.alpha} needs at least {order.alpha} transitions, "
                f"trajectory has {traj.length}"
            )
        return usable

    def g(traj: Trajectory) -> np.ndarray:
        head = _head(traj)
        s = traj.states[:head]
        phi = basis.features(s)
        d1, d2 = basis.derivatives(s)
        mu = np.empty(head)
        sig = np.empty(head)
        for j in range(head):
            mu[j], sig[j] = phibe_mu_sigma(traj, j, order)
        generator = mu[:, None] * d1 + 0.5 * sig[:, None] * d2
        diff = beta * phi - generator
        return np.add.reduce(phi[:, :, None] * diff[:, None, :], axis=0)

    def f(traj: Trajectory) -> np.ndarray:
        head = _head(traj)
        s = traj.states[:head]
        phi = basis.features(s)
        r = np.asarray(reward(s), dtype=float)
        return np.add.reduce(r[:, None] * phi, axis=0)

    return MomentMap(q=basis.q, g=g, f=f)


def value_predict(theta, basis: FourierBasis, states):
    """Predicted value function at the given states."""
    th = as_vector(theta, basis.q, "theta")
    return basis.features(states) @ th


class _PolicyValueEstimator(BaseEstimator):
    """Shared fit/predict plumbing for the trajectory estimators."""

    def __init__(
        self,
        harmonics: int = 4,
        reward=None,
        scheme: str = "full",
        n_subsamples: int = 100,
        subsample_size: int | None = None,
        weights=None,
        self_normalized: bool = True,
        random_state: int = 0,
        n_jobs: int | None = None,
    ):
        self.harmonics = harmonics
        self.reward = reward
        self.scheme = scheme
        self.n_subsamples = n_subsamples
        self.subsample_size = subsample_size
        self.weights = weights
        self.self_normalized = self_normalized
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _moments(self, basis: FourierBasis) -> MomentMap:
        raise NotImplementedError

    def fit(self, X, y=None):
        if self.reward is None:
            raise ValueError("a reward callable is required")
        trajectories = list(X)
        for t in trajectories:
            if not isinstance(t, Trajectory):
                raise TypeError(f"expected Trajectory items, got {type(t).__name__}")
        basis = FourierBasis(self.harmonics)
        cfg = ReplayConfig(
            scheme=self.scheme,
            n_subsamples=self.n_subsamples,
            subsample_size=self.subsample_size,
            seed=self.random_state,
            weights=self.weights,
            self_normalized=self.self_normalized,
        )
        result = estimate(trajectories, self._moments(basis), cfg, n_jobs=self.n_jobs or 1)
        self.basis_ = basis
        self.result_ = result
        self.theta_ = result.theta
        return self

    def predict(self, states):
        return value_predict(self.theta_, self.basis_, states)


class LSTDPolicyValue(_PolicyValueEstimator):
    """Discounted temporal-difference value estimator over trajectories."""

    def __init__(
        self,
        harmonics: int = 4,
        reward=None,
        discount: float = math.exp(-0.1),
        scheme: str = "full",
        n_subsamples: int = 100,
        subsample_size: int | None = None,
        weights=None,
        self_normalized: bool = True,
        random_state: int = 0,
        n_jobs: int | None = None,
    ):
        super().__init__(
            harmonics=harmonics,
            reward=reward,
            scheme=scheme,
            n_subsamples=n_subsamples,
            subsample_size=subsample_size,
            weights=weights,
            self_normalized=self_normalized,
            random_state=random_state,
            n_jobs=n_jobs,
        )
        self.discount = discount

    def _moments(self, basis: FourierBasis) -> MomentMap:
        return lstd_moments(basis, self.discount, self.reward)


class PhiBEPolicyValue(_PolicyValueEstimator):
    """Generator-based continuous-time value estimator over trajectories."""

    def __init__(
        self,
        harmonics: int = 4,
        reward=None,
        discount_rate: float = 0.1,
        order: int = 2,
        scheme: str = "full",
        n_subsamples: int = 100,
        subsample_size: int | None = None,
        weights=None,
        self_normalized: bool = True,
        random_state: int = 0,
        n_jobs: int | None = None,
    ):
        super().__init__(
            harmonics=harmonics,
            reward=reward,
            scheme=scheme,
            n_subsamples=n_subsamples,
            subsample_size=subsample_size,
            weights=weights,
            self_normalized=self_normalized,
            random_state=random_state,
            n_jobs=n_jobs,
        )
        self.discount_rate = discount_rate
        self.order = order

    def _moments(self, basis: FourierBasis) -> MomentMap:
        return phibe_moments(
            basis, self.discount_rate, self.reward, PhibeOrder(self.order)
        )
