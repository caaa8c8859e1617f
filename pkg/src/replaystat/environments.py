"""Data generators for the benchmark problems.

One-dimensional linear-drift diffusion with exact Gaussian transitions
(ds = lambda_drift * s dt + sigma dB), sampled at interval dt; truncated
normal initial states; the cubed-cosine value function with the reward
that makes it exact, in both per-step (MDP) and continuous-rate forms;
and a two-bump regression surface on the unit square with Gaussian noise.

Everything here is a pure function of (spec, seed); trajectories draw
from per-index streams so generation order and worker count never matter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .exceptions import EmptyFile, ParseError
from .trajectories import Trajectory
from .validation import check_positive_int

DRIFT_RATE = 0.05
NOISE_SCALE = 1.0
DISCOUNT_RATE = 0.1
STEP_SIZE = 0.1


@dataclass(frozen=True)
class OuSpec:
    """Linear-drift diffusion parameters; defaults match the benchmark presets."""

    lambda_drift: float = DRIFT_RATE
    sigma: float = NOISE_SCALE
    dt: float = STEP_SIZE

    def __post_init__(self):
        if not (np.isfinite(self.lambda_drift)):
            raise ValueError(f"lambda_drift must be finite, got {self.lambda_drift}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")


@dataclass(frozen=True)
class InitSpec:
    """Truncated normal initial-state law."""

    mean: float = 0.0
    sd: float = 0.1
    low: float = -math.pi
    high: float = math.pi

    def __post_init__(self):
        if not (np.isfinite(self.sd) and self.sd > 0):
            raise ValueError(f"sd must be positive and finite, got {self.sd}")
        if not self.low < self.high:
            raise ValueError(f"need low < high, got [{self.low}, {self.high}]")


@dataclass(frozen=True)
class RegressionSpec:
    """Two-bump surface on Unif(0,1)^2 with additive Gaussian noise."""

    noise_sd: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise ValueError(f"noise_sd must be nonnegative, got {self.noise_sd}")


def ou_transition_params(spec: OuSpec, s):
    """Exact one-step conditional mean and variance.

    mean = s * exp(lambda dt); variance = sigma^2/(2 lambda) * (exp(2 lambda dt) - 1),
    with the lambda -> 0 limit sigma^2 * dt taken exactly.
    """
    lam, sig, dt = spec.lambda_drift, spec.sigma, spec.dt
    mean = np.asarray(s, dtype=float) * math.exp(lam * dt)
    if lam == 0.0:
        var = sig * sig * dt
    else:
        var = sig * sig / (2.0 * lam) * math.expm1(2.0 * lam * dt)
    return mean, var


def sample_initial_state(gen: np.random.Generator, init: InitSpec) -> float:
    """Rejection-sampled truncated normal draw."""
    while True:
        s = init.mean + init.sd * gen.standard_normal()
        if init.low <= s <= init.high:
            return s


def sample_trajectories(spec: OuSpec, init: InitSpec, n: int, length: int, seed: int):
    """n independent trajectories of `length` transitions each.

    Trajectory i draws from its own stream keyed by (seed, i), so the
    result is independent of generation order.
    """
    check_positive_int(n, "n")
    check_positive_int(length, "length")
    sd_step = math.sqrt(ou_transition_params(spec, 0.0)[1])
    mult = math.exp(spec.lambda_drift * spec.dt)
    out = []
    for i in range(n):
        gen = rng.stream(seed, rng.DOMAIN_TRAJECTORY, i)
        states = np.empty(length + 1)
        states[0] = sample_initial_state(gen, init)
        noise = gen.standard_normal(length)
        for j in range(length):
            states[j + 1] = states[j] * mult + sd_step * noise[j]
        out.append(Trajectory(states=states, dt=spec.dt))
    return out


def _value_bracket(s, lambda_drift: float, sigma: float, beta: float):
    """beta*V - (drift term + diffusion term) for V(s) = cos^3(s)."""
    s = np.asarray(s, dtype=float)
    c = np.cos(s)
    sn = np.sin(s)
    v = c**3
    dv = -3.0 * c * c * sn
    d2v = 6.0 * c * sn * sn - 3.0 * c**3
    return beta * v - lambda_drift * s * dv - 0.5 * sigma * sigma * d2v


def make_reward_cont(
    lambda_drift: float = DRIFT_RATE,
    sigma: float = NOISE_SCALE,
    beta: float = DISCOUNT_RATE,
):
    """Continuous-rate reward making cos^3 the exact value function."""

    def reward(s):
        return _value_bracket(s, lambda_drift, sigma, beta)

    return reward


def make_reward_mdp(
    lambda_drift: float = DRIFT_RATE,
    sigma: float = NOISE_SCALE,
    beta: float = DISCOUNT_RATE,
    dt: float = STEP_SIZE,
):
    """Per-step reward: dt times the continuous-rate reward."""

    def reward(s):
        return dt * _value_bracket(s, lambda_drift, sigma, beta)

    return reward


reward_cont = make_reward_cont()
reward_mdp = make_reward_mdp()


def true_value(s):
    """cos^3 of the state."""
    return np.cos(np.asarray(s, dtype=float)) ** 3


def drift_estimate_mean(spec: OuSpec, s: float, coefficients) -> float:
    """Exact conditional expectation of the finite-difference drift estimate.

    E[(1/dt) sum_k a_k (s_{j+k} - s_j) | s_j = s], available in closed
    form because the k-step transition mean is s * exp(k lambda dt).
    """
    lam, dt = spec.lambda_drift, spec.dt
    a = np.asarray(coefficients, dtype=float)
    steps = np.arange(1, a.size + 1)
    return float(s) * float(a @ np.expm1(steps * lam * dt)) / dt


def two_bump_surface(x):
    """Noiseless regression target on the unit square."""
    arr = np.asarray(x, dtype=float)
    d1 = (arr[..., 0] - 0.25) ** 2 + (arr[..., 1] - 0.25) ** 2
    d2 = (arr[..., 0] - 0.7) ** 2 + (arr[..., 1] - 0.7) ** 2
    return np.exp(-10.0 * d1) + 0.5 * np.exp(-14.0 * d2)


def sample_regression(spec: RegressionSpec, n: int, seed: int, role: str = "train"):
    """n noisy draws from the two-bump surface; returns (x, y) arrays.

    ``role`` selects a disjoint stream ("train" or "test") so test inputs
    never collide with training draws under a shared seed.
    """
    check_positive_int(n, "n")
    domains = {"train": rng.DOMAIN_DATA, "test": rng.DOMAIN_TEST_SET}
    if role not in domains:
        raise ValueError(f"role must be one of {sorted(domains)}, got {role!r}")
    gen = rng.stream(seed, domains[role])
    x = gen.random((n, 2))
    y = two_bump_surface(x) + spec.noise_sd * gen.standard_normal(n)
    return x, y


def mdp_test_grid(m: int) -> np.ndarray:
    """m evenly spaced states from -pi to pi inclusive."""
    if not (isinstance(m, (int, np.integer)) and m >= 2):
        raise ValueError(f"m must be an integer >= 2, got {m!r}")
    return np.linspace(-math.pi, math.pi, int(m))


def write_regression_csv(path, x, y) -> None:
    """Tabular form: header x1..xp,y then one row per point, 17 significant digits."""
    arr = np.asarray(x, dtype=float)
    resp = np.asarray(y, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(arr.shape[1])] + ["y"])
        for row, val in zip(arr, resp):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{val:.17g}"])


def ingest_csv(path):
    """Parse a tabular file: header row, numeric predictors, last column response.

    Malformed rows raise ParseError carrying the 1-based line number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: no header row") from None
        if len(header) < 2:
            raise ParseError(f"{path}: need at least one predictor and a response column", line=1)
        width = len(header)
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(
                    f"{path}: expected {width} fields, got {len(row)}", line=lineno
                )
            try:
                values = [float(field) for field in row]
            except ValueError:
                raise ParseError(f"{path}: non-numeric field", line=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError(f"{path}: non-finite value", line=lineno)
            xs.append(values[:-1])
            ys.append(values[-1])
    if not xs:
        raise EmptyFile(f"{path}: header but no data rows")
    return np.array(xs), np.array(ys)
