"""Small input-validation helpers used across the public API."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, InvalidWeights


def as_vector(x, q: int, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (q,):
        raise DimensionMismatch(f"{name} must have shape ({q},), got {v.shape}")
    return v


def as_matrix(x, q: int, name: str = "matrix") -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.shape != (q, q):
        raise DimensionMismatch(f"{name} must have shape ({q}, {q}), got {m.shape}")
    return m


def as_design(x, cols: int | None = None, name: str = "design") -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a nonempty 2-d array, got shape {m.shape}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionMismatch(f"{name} must have {cols} columns, got {m.shape[1]}")
    return m


def check_positive_int(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_weights(weights, n: int) -> np.ndarray:
    """Validate sampling weights and return them as a float array.

    Weights are kept unnormalized here; the samplers normalize through the
    cumulative sum so that unit weights reproduce the uniform sampler's
    index stream exactly.
    """
    if weights is None:
        raise InvalidWeights("weighted scheme requires a weight vector")
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise InvalidWeights(f"weights must have shape ({n},), got {w.shape}")
    if not np.isfinite(w).all():
        raise InvalidWeights("weights must be finite")
    if (w < 0).any():
        raise InvalidWeights("weights must be nonnegative")
    if w.sum() <= 0:
        raise InvalidWeights("weights must have positive sum")
    return w


def check_states(states) -> np.ndarray:
    s = np.asarray(states, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise DimensionMismatch(
            f"states must be a 1-d array of at least 2 entries, got shape {s.shape}"
        )
    if not np.isfinite(s).all():
        raise ValueError("states must be finite")
    return s
