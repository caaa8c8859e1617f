"""Statistical diagnostics for the resampled estimators.

These routines quantify the variance structure that makes subsampled
replay work:

* ``complete_U``: the exhaustive average of the subsample kernel over all
  C(n, k) subsets, used as the oracle that incomplete schemes approximate;
* ``estimate_zeta``: Monte Carlo estimates of the covariance between two
  kernel evaluations sharing c of their k arguments;
* ``blom_variance_check``: confronts the Monte Carlo variance of the
  incomplete scheme with its exact decomposition into the complete-version
  variance plus a per-draw kernel-variance term;
* ``lemma1_sigma``: plug-in delta-method covariance of the full estimate;
* ``influence_values``: plug-in first-order influence contributions.

Scalar summaries of matrix variances use the trace, which reduces to the
plain variance in one dimension.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .buffers import as_buffer
from .estimators import ReplayConfig, Scheme, estimate_resampled_U
from .exceptions import CapExceeded
from .linalg import kahan_mean, solve_ridge
from .moments import MomentMap, eval_h_k
from .rng import DOMAIN_DIAGNOSTIC, stream, substream_seed

ENUMERATION_CAP = 10**6

# two-sided 99% normal quantile
_Z99 = 2.5758293035489004

Generator = Callable[[np.random.Generator, int], Sequence]


def complete_U(buffer, moments: MomentMap, k: int) -> np.ndarray:
    """Exact average of the kernel over all C(n, k) subsets.

    Subsets are enumerated in lexicographic index order and combined with
    the same compensated mean the estimators use.  Singular subsets are
    not skipped here: an oracle that silently dropped terms would not be
    an oracle.

    Raises
    ------
    CapExceeded
        If C(n, k) exceeds ENUMERATION_CAP.
    """
    buf = as_buffer(buffer)
    if k < 1 or k > buf.n:
        raise ValueError(f"k must be in [1, {buf.n}], got {k}")
    count = math.comb(buf.n, k)
    if count > ENUMERATION_CAP:
        raise CapExceeded(
            f"C({buf.n}, {k}) = {count} subsets exceeds cap {ENUMERATION_CAP}"
        )
    payloads = buf.payloads()
    values = (
        eval_h_k([payloads[i] for i in combo], moments)
        for combo in itertools.combinations(range(buf.n), k)
    )
    return kahan_mean(values)


@dataclass
class VarianceComponents:
    """Monte Carlo estimate of zeta_{c,k} with elementwise jackknife errors."""

    c: int
    k: int
    zeta: np.ndarray
    std_err: np.ndarray
    mc_reps: int


def estimate_zeta(
    generator: Generator,
    moments: MomentMap,
    c: int,
    k: int,
    mc_reps: int,
    seed: int = 0,
) -> VarianceComponents:
    """Estimate Cov(h(Z_1..Z_k), h(Z_1..Z_c, Z'_{c+1}..Z'_k)).

    Each replication draws 2k - c fresh payloads from ``generator`` and
    evaluates the kernel on the two overlapping argument lists.  The
    covariance is computed around shifted means so a degenerate generator
    yields exactly zero, and elementwise delete-one jackknife standard
    errors accompany the estimate.
    """
    if not 1 <= c <= k:
        raise ValueError(f"need 1 <= c <= k, got c={c}, k={k}")
    if mc_reps < 3:
        raise ValueError(f"mc_reps must be >= 3, got {mc_reps}")
    rng = stream(seed, DOMAIN_DIAGNOSTIC, 0)
    q = moments.q
    h1 = np.empty((mc_reps, q))
    h2 = np.empty((mc_reps, q))
    for r in range(mc_reps):
        z = list(generator(rng, 2 * k - c))
        if len(z) != 2 * k - c:
            raise ValueError("generator returned the wrong number of payloads")
        h1[r] = eval_h_k(z[:k], moments)
        h2[r] = eval_h_k(z[:c] + z[k:], moments)

    # shift by the first replication: identical inputs then cancel exactly
    d1 = h1 - h1[0]
    d2 = h2 - h2[0]
    m1 = d1.mean(axis=0)
    m2 = d2.mean(axis=0)
    zeta = (d1 - m1).T @ (d2 - m2) / mc_reps

    # delete-one jackknife from sufficient statistics of the shifted rows
    R = mc_reps
    s12 = d1.T @ d2
    s1 = d1.sum(axis=0)
    s2 = d2.sum(axis=0)
    cross = np.einsum("ri,rj->rij", d1, d2)
    mean1_del = (s1[None, :] - d1) / (R - 1)
    mean2_del = (s2[None, :] - d2) / (R - 1)
    zeta_del = (s12[None] - cross) / (R - 1) - np.einsum(
        "ri,rj->rij", mean1_del, mean2_del
    )
    zeta_bar = zeta_del.mean(axis=0)
    std_err = np.sqrt((R - 1) / R * ((zeta_del - zeta_bar) ** 2).sum(axis=0))
    return VarianceComponents(c=c, k=k, zeta=zeta, std_err=std_err, mc_reps=mc_reps)


@dataclass
class BlomReport:
    """Both sides of the incomplete-variance identity plus a 99% CI on lhs - rhs."""

    lhs: float
    rhs: float
    ci_low: float
    ci_high: float
    reps: int

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "reps": self.reps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _delete_one_variances(x: np.ndarray) -> np.ndarray:
    """Unbiased sample variances with row i removed, for each i; x is (R,)."""
    R = x.shape[0]
    shifted = x - x[0]
    s = shifted.sum()
    qsum = (shifted**2).sum()
    return (qsum - shifted**2 - (s - shifted) ** 2 / (R - 1)) / (R - 2)


def blom_variance_check(
    generator: Generator,
    moments: MomentMap,
    n: int,
    k: int,
    B: int,
    outer_reps: int,
    seed: int = 0,
    zeta_reps: int | None = None,
) -> BlomReport:
    """Monte Carlo check of the incomplete-scheme variance identity.

    lhs is the variance (trace for q > 1) of the B-subset estimator over
    ``outer_reps`` fresh buffers of size n.  rhs combines the variance of
    the complete version over the same buffers with the per-draw kernel
    variance zeta_{k,k} estimated separately:

        rhs = (1 - 1/B) * Var(complete) + zeta_{k,k} / B

    The CI on lhs - rhs comes from a paired delete-one jackknife over the
    outer replications, widened by the jackknife error of the zeta term.
    """
    if outer_reps < 100:
        raise ValueError(f"outer_reps must be >= 100, got {outer_reps}")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    q = moments.q
    inc = np.empty((outer_reps, q))
    comp = np.empty((outer_reps, q))
    for r in range(outer_reps):
        buf = list(generator(stream(seed, DOMAIN_DIAGNOSTIC, 1, r), n))
        cfg = ReplayConfig(
            scheme=Scheme.U_STAT,
            n_subsamples=B,
            subsample_size=k,
            seed=substream_seed(seed, 2, r),
        )
        inc[r] = estimate_resampled_U(buf, moments, cfg).theta
        comp[r] = complete_U(buf, moments, k)

    zres = estimate_zeta(
        generator, moments, c=k, k=k, mc_reps=zeta_reps or outer_reps,
        seed=substream_seed(seed, 3),
    )

    lhs = float(inc.var(axis=0, ddof=1).sum())
    var_comp = float(comp.var(axis=0, ddof=1).sum())
    zeta_trace = float(np.trace(np.atleast_2d(zres.zeta)))
    rhs = (1.0 - 1.0 / B) * var_comp + zeta_trace / B
    diff = lhs - rhs

    # paired jackknife for the buffer-driven part of the difference
    R = outer_reps
    t_del = np.zeros(R)
    for c_idx in range(q):
        t_del += _delete_one_variances(inc[:, c_idx])
        t_del -= (1.0 - 1.0 / B) * _delete_one_variances(comp[:, c_idx])
    se_pairs = math.sqrt((R - 1) / R * ((t_del - t_del.mean()) ** 2).sum())
    se_zeta = math.sqrt(float((np.diag(np.atleast_2d(zres.std_err)) ** 2).sum())) / B
    se = math.hypot(se_pairs, se_zeta)
    return BlomReport(
        lhs=lhs,
        rhs=rhs,
        ci_low=diff - _Z99 * se,
        ci_high=diff + _Z99 * se,
        reps=outer_reps,
    )


@dataclass
class AsymptoticCovariance:
    """Delta-method covariance of the full estimate, with its ingredients."""

    sigma: np.ndarray
    jacobian: np.ndarray
    moment_cov: np.ndarray
    theta: np.ndarray


def _plugin_inverse(G_el: np.ndarray, F_el: np.ndarray):
    """Inverse of the mean matrix moment via one pivoted factorization.

    Diagnostics target the unregularized functional, so no ridge is used.
    """
    q = G_el.shape[1]
    mu_g = G_el.mean(axis=0)
    mu_f = F_el.mean(axis=0)
    rhs = np.column_stack([mu_f, np.eye(q)])
    sol, _ = solve_ridge(mu_g, rhs, 0.0)
    return mu_g, mu_f, sol[:, 0], sol[:, 1:]


def lemma1_sigma(buffer, moments: MomentMap) -> AsymptoticCovariance:
    """Plug-in delta-method covariance of sqrt(n) times the full estimate.

    The moment covariance stacks f(Z) with the column-stacked vectorization
    of g(Z); the Jacobian is [M, -theta^T kron M] with M the inverse mean
    matrix moment, assembled with an explicit Kronecker product.
    """
    buf = as_buffer(buffer)
    q = moments.q
    if buf.n < q + 2:
        raise ValueError(f"need at least q + 2 = {q + 2} items, got {buf.n}")
    G_el, F_el = moments.element_moments(buf.payloads())
    _, _, theta, minv = _plugin_inverse(G_el, F_el)
    # vec by columns: flatten the transpose row-major
    vec_g = G_el.transpose(0, 2, 1).reshape(buf.n, q * q)
    stacked = np.concatenate([F_el, vec_g], axis=1)
    sigma0 = np.atleast_2d(np.cov(stacked, rowvar=False, ddof=1))
    jac = np.hstack([minv, -np.kron(theta[None, :], minv)])
    sigma = jac @ sigma0 @ jac.T
    return AsymptoticCovariance(
        sigma=sigma, jacobian=jac, moment_cov=sigma0, theta=theta
    )


def influence_values(buffer, moments: MomentMap) -> np.ndarray:
    """First-order influence contribution of every buffered item.

    Returns an (n, q) array whose rows average to zero by construction of
    the plug-in means.
    """
    buf = as_buffer(buffer)
    G_el, F_el = moments.element_moments(buf.payloads())
    mu_g, mu_f, theta, minv = _plugin_inverse(G_el, F_el)
    resid_f = F_el - mu_f
    resid_g_theta = (G_el - mu_g) @ theta
    return (resid_f - resid_g_theta) @ minv.T
