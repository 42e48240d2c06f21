"""Measuring what a randomization defense does to queries and when to stop.

estimate_rho measures the per-query disagreement rate a model-perturbation
defense induces at a point; hotelling_t2 is the two-sample location test
used to tell synthesized query clouds from benign traffic. The F tail
probability is computed from a hand-rolled regularized incomplete beta
(continued fraction), so no statistics library is required at runtime.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import as_vector, sign_pm1


@dataclass
class RhoEstimate:
    rho_hat: float
    n: int


def estimate_rho(w_star, x, sigma, n, rng):
    """Empirical Pr[sign(<w', x>) != sign(<w*, x>)] over n draws
    w' ~ N(w*, sigma^2 I)."""
    w = as_vector(w_star)
    x = as_vector(x, w.size)
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    base = sign_pm1(float(w @ x))
    draws = w[None, :] + sigma * rng.standard_normal((int(n), w.size))
    labels = sign_pm1(draws @ x)
    return RhoEstimate(rho_hat=float(np.mean(labels != base)), n=int(n))


# -- regularized incomplete beta and the F tail ------------------------------

_BETA_EPS = 3e-16
_BETA_FPMIN = 1e-300
_BETA_MAXIT = 300


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (Lentz's method)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a, b, x):
    """I_x(a, b) to absolute accuracy around 1e-10 or better."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if x < 0.0 or x > 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def f_survival(f, d1, d2):
    """Upper tail Pr[F >= f] of the F(d1, d2) distribution."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0.0:
        return 1.0
    # Direct tail form avoids cancellation for tiny p-values.
    x = d2 / (d2 + d1 * f)
    return regularized_incomplete_beta(0.5 * d2, 0.5 * d1, x)


@dataclass
class HotellingResult:
    statistic: float  # T^2
    f_stat: float
    df: tuple
    p_value: float


def hotelling_t2(sample_a, sample_b):
    """Two-sample Hotelling T^2 test of equal means.

    Pooled covariance gets a ridge of 1e-8 * trace/p before inversion;
    a pooled covariance that is still not positive definite is an error.
    Identical samples give statistic 0 and p-value 1.
    """
    A = np.asarray(sample_a, dtype=np.float64)
    B = np.asarray(sample_b, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValueError("samples must be 2-D with matching column counts")
    n1, p = A.shape
    n2 = B.shape[0]
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs at least two rows")
    if n1 + n2 - p - 1 < 1:
        raise ValueError("n1 + n2 - p - 1 must be >= 1 for the F reference")
    diff = A.mean(axis=0) - B.mean(axis=0)
    sa = np.cov(A, rowvar=False, ddof=1).reshape(p, p)
    sb = np.cov(B, rowvar=False, ddof=1).reshape(p, p)
    pooled = ((n1 - 1) * sa + (n2 - 1) * sb) / (n1 + n2 - 2)
    ridge = 1e-8 * np.trace(pooled) / p
    pooled = pooled + ridge * np.eye(p)
    try:
        chol = np.linalg.cholesky(pooled)
    except np.linalg.LinAlgError:
        raise ValueError("pooled covariance is rank-deficient even after ridge")
    z = np.linalg.solve(chol, diff)
    t2 = float(n1 * n2 / (n1 + n2) * (z @ z))
    df = (p, n1 + n2 - p - 1)
    f_stat = float((n1 + n2 - p - 1) / ((n1 + n2 - 2) * p) * t2)
    return HotellingResult(
        statistic=t2, f_stat=f_stat, df=df, p_value=f_survival(f_stat, df[0], df[1])
    )


@dataclass
class DistanceStats:
    minimum: float
    median: float
    mean: float
    maximum: float
    n_used: int
    n_skipped: int


def boundary_distance_stats(points, w_star):
    """Distribution of normalized boundary distances |<w*, x>| / ||x||.

    Zero vectors carry no direction and are skipped (counted); emits a
    warning when any are dropped.
    """
    w = as_vector(w_star)
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != w.size:
        raise ValueError("points must be an (n, %d) matrix" % w.size)
    norms = np.linalg.norm(X, axis=1)
    keep = norms > 0.0
    skipped = int((~keep).sum())
    if skipped:
        warnings.warn("skipped %d zero vectors in distance stats" % skipped)
    if not np.any(keep):
        raise ValueError("no nonzero points to measure")
    dists = np.abs(X[keep] @ w) / norms[keep]
    return DistanceStats(
        minimum=float(dists.min()),
        median=float(np.median(dists)),
        mean=float(dists.mean()),
        maximum=float(dists.max()),
        n_used=int(keep.sum()),
        n_skipped=skipped,
    )


def stability_stop(history, N, tau):
    """True when the last N successive estimate deltas are all <= tau.

    history is a sequence of weight vectors; fewer than N+1 entries can
    never satisfy the rule and return False.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    if len(history) < N + 1:
        return False
    tail = np.asarray(history[-(N + 1):], dtype=np.float64)
    deltas = np.linalg.norm(np.diff(tail, axis=0), axis=1)
    return bool(np.all(deltas <= tau))
