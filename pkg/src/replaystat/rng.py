"""Deterministic stream derivation for all randomness in the package.

Every consumer of randomness gets its own counter-based generator (Philox)
whose 128-bit key is derived from an integer seed plus a short integer path,
e.g. ``(seed, domain, replication, subsample)``.  Streams are therefore

* splittable: any (seed, path) pair can be derived without touching any
  other stream, so subsample evaluations can run in any order or thread;
* stable: the key derivation is pure integer arithmetic, independent of
  process, platform, and worker count.

Domain constants keep unrelated consumers on disjoint paths; adding draws
to one domain never perturbs another.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Stream domains. Keep values stable: they are part of reproducibility.
DOMAIN_DATA = 0        # dataset generation (one stream per replication)
DOMAIN_ESTIMATE = 1    # subsample draws (per replication, scheme, subsample)
DOMAIN_DIAGNOSTIC = 2  # Monte Carlo diagnostics
DOMAIN_TEST_SET = 3    # held-out test draws
DOMAIN_FEATURES = 4    # random feature maps
DOMAIN_TRAJECTORY = 5  # per-trajectory simulation streams


def _mix64(x: int) -> int:
    # splitmix64 finalizer; full-period bijection on 64-bit ints
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


# Odd multiplier for the path fold.  Multiply-accumulate keeps the chain
# order-dependent: xor-folding hashed elements would make (seed, path) and
# (path, seed) collide whenever both are single integers.
_FOLD_MULT = 0xD1342543DE82EF95


def stream_key(seed: int, *path: int) -> int:
    """Derive a 128-bit Philox key from ``seed`` and an integer path.

    The chain hashes the seed, then folds in one path element at a time;
    a final length fold keeps ``(seed, a)`` and ``(seed, a, b)`` apart
    even when the shorter path is a prefix of the longer.
    """
    h = _mix64(int(seed) & _MASK64)
    h = _mix64(h ^ _mix64((int(seed) >> 64) & _MASK64))
    for p in path:
        h = _mix64((h * _FOLD_MULT + _mix64(int(p) & _MASK64)) & _MASK64)
    h = _mix64(h ^ len(path))
    lo = _mix64(h)
    hi = _mix64(lo)
    return (hi << 64) | lo


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for ``(seed, *path)``."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *path)))


def substream_seed(seed: int, *path: int) -> int:
    """Collapse ``(seed, *path)`` into a plain 64-bit seed.

    Used when a component takes a scalar seed of its own (for example the
    per-replication dataset seed) but must still live on a disjoint branch
    of the master stream.
    """
    return stream_key(seed, *path) & _MASK64
