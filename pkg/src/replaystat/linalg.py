"""Ridge-regularized linear solves with a uniform singularity policy.

Every estimate in the package reduces to solving

    (sum_i g(Z_i) + ridge * I) x = sum_i f(Z_i)

The matrix is factorized with partial pivoting; it is never inverted
explicitly.  Conditioning is estimated from the same factorization by
solving against two fixed probe vectors, which bounds the inverse norm
from below and therefore never reports a system as better conditioned
than one observed amplification.

A raw solve whose estimated reciprocal condition number falls below
``RCOND_DIRECT`` (square root of machine epsilon: fewer than half the
mantissa digits survive) is retried once with a diagonal jitter of
``JITTER_SCALE * |trace(sum g)| / q``.  The retried system is solved
rank-revealingly: singular directions below ``RCOND_RETRY`` relative
to the largest are dropped rather than resolved, so a consistent
rank-deficient system yields the minimum-norm solution of its
well-determined part instead of noise amplified by the reciprocal of
the jitter.  ``RCOND_RETRY`` sits an order of magnitude above
``RCOND_DIRECT``: a direction that barely failed the raw gate would,
if resolved, reintroduce the amplification that forced the retry in
the first place.  A retry fails only when no direction survives (the
accumulated matrix has zero trace, so no jitter can be formed, or the
decomposition does not converge); the caller then decides whether to
skip the subsample or to abort.

``solve_ridge_block`` is the throughput path for batches of subsample
systems; ``solve_ridge`` is the same computation on a batch of one, so
the two paths agree bit for bit.
"""

from __future__ import annotations

import numpy as np

from .exceptions import SingularSystem

RCOND_DIRECT = float(np.sqrt(np.finfo(float).eps))
RCOND_RETRY = 1e-7
JITTER_SCALE = 1e-10


def ridge_jitter(gsum: np.ndarray) -> float:
    return JITTER_SCALE * abs(float(np.trace(gsum))) / gsum.shape[0]


def _batch_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched solve; rows of exactly singular systems come back NaN.

    LAPACK processes each (q, q) slice independently, so the result for
    a given system does not depend on what else is in the batch.
    """
    with np.errstate(all="ignore"):
        try:
            return np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            out = np.full(rhs.shape, np.nan)
            for j in range(a.shape[0]):
                try:
                    out[j] = np.linalg.solve(a[j], rhs[j])
                except np.linalg.LinAlgError:
                    pass
            return out


def _truncated_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched least-squares solve that drops ill-determined directions.

    Computed from the singular value decomposition with a relative
    cutoff of ``RCOND_RETRY``; rows whose decomposition fails to
    converge come back NaN.
    """
    with np.errstate(all="ignore"):
        try:
            u, s, vt = np.linalg.svd(a)
        except np.linalg.LinAlgError:
            out = np.full(rhs.shape, np.nan)
            for j in range(a.shape[0]):
                try:
                    uj, sj, vtj = np.linalg.svd(a[j])
                except np.linalg.LinAlgError:
                    continue
                keep = sj > sj[0] * RCOND_RETRY
                sinv = np.where(keep, 1.0, 0.0) / np.where(keep, sj, 1.0)
                out[j] = vtj.T @ (sinv[:, None] * (uj.T @ rhs[j]))
            return out
        sinv = np.where(s > s[:, :1] * RCOND_RETRY, 1.0 / np.where(s > 0, s, 1.0), 0.0)
        return np.swapaxes(vt, 1, 2) @ (sinv[:, :, None] * (np.swapaxes(u, 1, 2) @ rhs))


def _probe_rcond(a: np.ndarray, probe_sol: np.ndarray) -> np.ndarray:
    """Reciprocal condition estimate in the infinity norm.

    ``probe_sol`` holds A^-1 p for unit-infinity-norm probes p, so
    max |A^-1 p| is a lower bound on the inverse norm and the returned
    estimate is an upper bound on the true rcond: anything flagged here
    is genuinely suspect.
    """
    anorm = np.abs(a).sum(axis=2).max(axis=1)
    inv_norm = np.abs(probe_sol).max(axis=(1, 2))
    with np.errstate(all="ignore"):
        denom = anorm * inv_norm
        rcond = np.where(denom > 0, 1.0 / denom, 0.0)
    return np.where(np.isfinite(rcond), rcond, 0.0)


def solve_ridge_block(G: np.ndarray, F: np.ndarray, ridge: float = 0.0):
    """Solve a block of moment systems, one per subsample.

    Parameters
    ----------
    G : (B, q, q) ndarray
    F : (B, q) ndarray
    ridge : float
        Regularization added once, on this solve, as ``ridge * I``.

    Returns
    -------
    theta : (B, q) ndarray
        Solutions; rows of skipped subsamples are NaN.
    used : (B,) bool ndarray
        False where the subsample was skipped as singular.
    jittered : (B,) bool ndarray
        True where the jitter retry produced the accepted solution.
    """
    B, q = F.shape
    eye = np.eye(q)
    a = G + ridge * eye if ridge != 0.0 else G
    theta = np.full((B, q), np.nan)
    used = np.zeros(B, dtype=bool)
    jittered = np.zeros(B, dtype=bool)

    finite = np.isfinite(a).all(axis=(1, 2)) & np.isfinite(F).all(axis=1)
    if not finite.any():
        return theta, used, jittered

    probes = np.empty((q, 2))
    probes[:, 0] = 1.0
    probes[:, 1] = np.where(np.arange(q) % 2 == 0, 1.0, -1.0)
    rhs = np.concatenate([F[:, :, None], np.broadcast_to(probes, (B, q, 2))], axis=2)

    idx = np.nonzero(finite)[0]
    sol = _batch_solve(a[idx], rhs[idx])
    rcond = _probe_rcond(a[idx], sol[:, :, 1:])
    ok = (rcond >= RCOND_DIRECT) & np.isfinite(sol[:, :, 0]).all(axis=1)
    theta[idx[ok]] = sol[ok, :, 0]
    used[idx[ok]] = True

    retry = idx[~ok]
    if retry.size:
        jit = JITTER_SCALE * np.abs(np.trace(G[retry], axis1=1, axis2=2)) / q
        live = retry[jit > 0.0]
        if live.size:
            aj = a[live] + jit[jit > 0.0, None, None] * eye
            sol = _truncated_solve(aj, rhs[live][:, :, :1])
            ok = np.isfinite(sol[:, :, 0]).all(axis=1)
            theta[live[ok]] = sol[ok, :, 0]
            used[live[ok]] = True
            jittered[live[ok]] = True
    return theta, used, jittered


def solve_ridge(gsum: np.ndarray, fsum: np.ndarray, ridge: float = 0.0):
    """Solve one moment system under the singularity policy.

    ``fsum`` may be a single right-hand side (q,) or a matrix of them
    (q, r); the acceptance decision depends only on the matrix, so all
    columns share one verdict.

    Returns
    -------
    x : ndarray, same trailing shape as ``fsum``
    jittered : bool
        True when the diagonal jitter retry was needed.

    Raises
    ------
    SingularSystem
        If the system is rejected even after the jitter retry.
    """
    rhs = np.asarray(fsum, dtype=float)
    cols = rhs[:, None] if rhs.ndim == 1 else rhs
    reps = np.broadcast_to(gsum, (cols.shape[1],) + gsum.shape)
    theta, used, jittered = solve_ridge_block(reps, cols.T, ridge)
    if not used.all():
        q = gsum.shape[0]
        raise SingularSystem(
            f"{q}x{q} moment system is singular (jitter retry {ridge_jitter(gsum):.3e} failed)"
        )
    out = theta.T
    return (out[:, 0] if rhs.ndim == 1 else out), bool(jittered.any())


def kahan_mean(rows) -> np.ndarray:
    """Compensated mean of equal-shape float vectors, in iteration order.

    The summation order is part of the reproducibility contract: callers
    pass rows in subsample-index order regardless of how many workers
    produced them.
    """
    it = iter(rows)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("kahan_mean of an empty sequence") from None
    total = np.array(first, dtype=float, copy=True)
    comp = np.zeros_like(total)
    count = 1
    for row in it:
        y = row - comp
        t = total + y
        comp = (t - total) - y
        total = t
        count += 1
    return total / count
