"""Trigonometric value-function basis on the interval [-pi, pi].

Components, in order: the constant 1/sqrt(2 pi), then for each harmonic
i = 1..I the pair cos(i s)/sqrt(pi), sin(i s)/sqrt(pi).  The basis is
orthonormal in L2 on the interval, and its first two derivatives are
available in closed form, which the generator-based policy evaluation
needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FourierBasis:
    """I harmonics plus the constant: q = 2 I + 1 components."""

    harmonics: int = 4

    def __post_init__(self):
        if self.harmonics < 0:
            raise ValueError(f"harmonics must be >= 0, got {self.harmonics}")

    @property
    def q(self) -> int:
        return 2 * self.harmonics + 1

    def _tables(self, states: np.ndarray):
        i = np.arange(1, self.harmonics + 1, dtype=float)
        ang = states[..., None] * i
        return i, np.cos(ang) / np.sqrt(np.pi), np.sin(ang) / np.sqrt(np.pi)

    def features(self, states) -> np.ndarray:
        """Basis values, shape states.shape + (q,)."""
        s = np.asarray(states, dtype=float)
        out = np.empty(s.shape + (self.q,))
        out[..., 0] = 1.0 / np.sqrt(2.0 * np.pi)
        if self.harmonics:
            _, cos_t, sin_t = self._tables(s)
            out[..., 1::2] = cos_t
            out[..., 2::2] = sin_t
        return out

    def derivatives(self, states):
        """First and second derivative tables, each states.shape + (q,)."""
        s = np.asarray(states, dtype=float)
        d1 = np.zeros(s.shape + (self.q,))
        d2 = np.zeros(s.shape + (self.q,))
        if self.harmonics:
            i, cos_t, sin_t = self._tables(s)
            d1[..., 1::2] = -i * sin_t
            d1[..., 2::2] = i * cos_t
            d2[..., 1::2] = -(i**2) * cos_t
            d2[..., 2::2] = -(i**2) * sin_t
        return d1, d2


def basis_eval(basis: FourierBasis, s: float):
    """Value, first and second derivative of every component at one state."""
    phi = basis.features(s)
    d1, d2 = basis.derivatives(s)
    return phi, d1, d2
