"""Index sampling for the resampled estimators.

Three draw primitives, all deterministic given a generator:

* without replacement: each subset uniform over all C(n, k) possibilities,
  returned sorted ascending so downstream summation order is fixed;
* with replacement: k indices i.i.d. uniform on {0, ..., n-1};
* weighted: k indices i.i.d. from a normalized weight vector.

The with-replacement and weighted draws share one inverse-CDF routine fed
by the same uniform variates, so the weighted sampler with unit weights
reproduces the uniform sampler's index stream bit for bit.

Block builders draw every subsample from a single stream keyed by
(seed, DOMAIN_ESTIMATE) in one vectorized pass, before any solve runs;
evaluation order and worker count therefore cannot change the draws.
"""

from __future__ import annotations

import numpy as np

from .rng import DOMAIN_ESTIMATE, stream
from .validation import check_positive_int


def uniform_cdf(n: int) -> np.ndarray:
    # cumsum of exact integers keeps this identical to the weighted path
    # when the caller supplies unit weights
    return np.cumsum(np.ones(n)) / n


def weights_cdf(weights: np.ndarray) -> np.ndarray:
    """CDF of raw nonnegative weights, normalized through the running sum.

    For unit weights this is bit-identical to ``uniform_cdf``.
    """
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def _iid_from_cdf(cdf: np.ndarray, shape, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(shape)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1).astype(np.intp)


def draw_without_replacement(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """One size-k subset, uniform over C(n, k), sorted ascending."""
    check_positive_int(k, "k")
    if k > n:
        raise ValueError(f"k={k} exceeds buffer size n={n} for subset draws")
    idx = rng.choice(n, size=k, replace=False)
    idx.sort()
    return idx.astype(np.intp)


def draw_with_replacement(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k indices i.i.d. uniform on {0, ..., n-1}; k may exceed n."""
    check_positive_int(k, "k")
    return _iid_from_cdf(uniform_cdf(n), k, rng)


def draw_weighted(cdf: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k indices i.i.d. from the distribution with the given CDF."""
    check_positive_int(k, "k")
    return _iid_from_cdf(cdf, k, rng)


def u_index_block(n: int, k: int, B: int, seed: int) -> np.ndarray:
    """B independent without-replacement subsets as a (B, k) array.

    Subsets are drawn independently, so the same subset can recur across
    rows; within a row there are no repeats.  Each row holds the indices
    of the k smallest of n i.i.d. uniform keys, which by exchangeability
    is a uniform draw over C(n, k); rows come back sorted ascending.
    """
    check_positive_int(k, "k")
    if k > n:
        raise ValueError(f"k={k} exceeds buffer size n={n} for subset draws")
    keys = stream(seed, DOMAIN_ESTIMATE).random((B, n))
    out = np.argpartition(keys, k - 1, axis=1)[:, :k]
    out.sort(axis=1)
    return out.astype(np.intp)


def v_index_block(n: int, k: int, B: int, seed: int) -> np.ndarray:
    """B rows of k i.i.d. uniform indices as a (B, k) array."""
    check_positive_int(k, "k")
    return _iid_from_cdf(uniform_cdf(n), (B, k), stream(seed, DOMAIN_ESTIMATE))


def weighted_index_block(
    weights: np.ndarray, k: int, B: int, seed: int
) -> np.ndarray:
    """B rows of k i.i.d. weighted indices as a (B, k) array."""
    check_positive_int(k, "k")
    return _iid_from_cdf(weights_cdf(weights), (B, k), stream(seed, DOMAIN_ESTIMATE))
