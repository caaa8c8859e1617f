"""Moment maps: the problem definition consumed by every estimator.

A MomentMap describes the target

    theta = (E g(Z))^-1 (E f(Z))

through its per-experience contributions g (a q x q matrix) and f (a
vector in R^q), plus the ridge applied once per solve.  Estimators never
look inside payloads; they only sum these contributions over subsamples
and solve the resulting system.

``eval_h_k`` is the subsample kernel itself, evaluated on an explicit
subset.  The bulk estimators go through a MomentTable, which caches the
per-element contributions once per buffer and serves vectorized
subset sums; specialized maps may override ``table`` with a structured
implementation (see the rank-one table used for feature regression).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .buffers import Experience
from .linalg import solve_ridge
from .validation import as_matrix, as_vector


def payload_of(item: Any) -> Any:
    return item.payload if isinstance(item, Experience) else item


@dataclass(frozen=True)
class MomentMap:
    """Problem definition: dimension, per-element moments, and ridge.

    Parameters
    ----------
    q : int
        Dimension of the estimate.
    g : callable
        Maps one payload to a (q, q) array.
    f : callable
        Maps one payload to a (q,) array.
    ridge : float, default 0.0
        Added to the diagonal once per solve; it is not rescaled with the
        subsample size.
    """

    q: int
    g: Callable[[Any], np.ndarray]
    f: Callable[[Any], np.ndarray]
    ridge: float = 0.0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise ValueError(f"ridge must be finite and >= 0, got {self.ridge}")

    def element_moments(self, payloads: Sequence[Any]):
        """Evaluate g and f on every payload; returns (n,q,q) and (n,q)."""
        n = len(payloads)
        G = np.empty((n, self.q, self.q))
        F = np.empty((n, self.q))
        for i, z in enumerate(payloads):
            G[i] = as_matrix(self.g(z), self.q, "g(z)")
            F[i] = as_vector(self.f(z), self.q, "f(z)")
        return G, F

    def table(self, payloads: Sequence[Any]) -> "DenseMomentTable":
        return DenseMomentTable(self, payloads)


class DenseMomentTable:
    """Per-element moment cache with vectorized subset sums."""

    def __init__(self, moments: MomentMap, payloads: Sequence[Any]):
        self.q = moments.q
        self.G, self.F = moments.element_moments(payloads)
        self.n = len(payloads)

    def subset_sums(self, idx: np.ndarray):
        """Sum moments over each index row; idx has shape (B, k)."""
        return self.G[idx].sum(axis=1), self.F[idx].sum(axis=1)


def eval_h_k(subset, moments: MomentMap) -> np.ndarray:
    """Evaluate the subsample kernel on an explicit subset.

    Parameters
    ----------
    subset : sequence of Experience or raw payloads, repeats allowed.
    moments : MomentMap

    Returns
    -------
    (q,) ndarray solving (sum g + ridge I) x = sum f over the subset.

    Raises
    ------
    SingularSystem
        If the system is rejected even after the jitter retry.
    """
    payloads = [payload_of(z) for z in subset]
    if not payloads:
        raise ValueError("subset must be non-empty")
    G, F = moments.element_moments(payloads)
    gsum = np.add.reduce(G, axis=0)
    fsum = np.add.reduce(F, axis=0)
    x, _ = solve_ridge(gsum, fsum, moments.ridge)
    return x
