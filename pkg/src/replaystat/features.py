"""Random cosine feature maps approximating a Gaussian kernel.

A map of width q over inputs in R^p evaluates

    phi_j(x) = sqrt(2/q) * cos(w_j . x + b_j)

with frequencies w_j drawn from N(0, I / bandwidth^2) and offsets b_j
uniform on [0, 2pi).  The inner product phi(x) . phi(x') is an unbiased
Monte Carlo estimate of exp(-||x - x'||^2 / (2 bandwidth^2)), the same
width convention as the exact Gram path.

Maps are reproducible: ``make_feature_map`` with the same (p, q,
bandwidth, seed) always returns bit-identical draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .validation import check_positive_int


@dataclass(frozen=True)
class FeatureMap:
    frequencies: np.ndarray  # (q, p)
    offsets: np.ndarray  # (q,)
    bandwidth: float

    def __post_init__(self):
        freq = np.asarray(self.frequencies, dtype=float)
        off = np.asarray(self.offsets, dtype=float)
        if freq.ndim != 2:
            raise ValueError(f"frequencies must be 2-d, got shape {freq.shape}")
        if off.shape != (freq.shape[0],):
            raise ValueError(
                f"offsets shape {off.shape} does not match {freq.shape[0]} frequencies"
            )
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")
        object.__setattr__(self, "frequencies", freq)
        object.__setattr__(self, "offsets", off)

    @property
    def q(self) -> int:
        return self.frequencies.shape[0]

    @property
    def p(self) -> int:
        return self.frequencies.shape[1]

    def transform(self, x) -> np.ndarray:
        """Feature rows for inputs of shape (m, p) or a single (p,) point."""
        arr = np.asarray(x, dtype=float)
        squeeze = arr.ndim == 1
        if squeeze:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.p:
            raise ValueError(f"expected inputs with {self.p} columns, got shape {arr.shape}")
        out = np.cos(arr @ self.frequencies.T + self.offsets)
        out *= math.sqrt(2.0 / self.q)
        return out[0] if squeeze else out


def make_feature_map(p: int, q: int, bandwidth: float, seed: int) -> FeatureMap:
    """Draw a reproducible random cosine feature map."""
    check_positive_int(p, "p")
    check_positive_int(q, "q")
    gen = rng.stream(seed, rng.DOMAIN_FEATURES)
    frequencies = gen.standard_normal((q, p)) / bandwidth
    offsets = gen.random(q) * (2.0 * math.pi)
    return FeatureMap(frequencies=frequencies, offsets=offsets, bandwidth=bandwidth)
