"""Vectors, halfspaces, and error measures on the unit sphere.

Labels live in {-1, +1} with the convention sign(0) = +1 throughout, so
every classifier here is total: points exactly on a decision boundary get
the positive label.
"""

import numpy as np

UNIT_NORM_ATOL = 1e-9
UNIT_NORM_RENORM_TOL = 1e-6


def as_vector(x, d=None):
    """Coerce x to a finite 1-D float64 array, optionally checking length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a 1-D vector with d >= 1, got shape %s" % (v.shape,))
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if d is not None and v.size != d:
        raise ValueError("expected dimension %d, got %d" % (d, v.size))
    return v


def unit_vector(x, d=None):
    """Validate x as a unit vector, renormalizing away rounding error.

    Norms within 1e-6 of 1 are silently renormalized; anything farther off
    is rejected rather than guessed at.
    """
    v = as_vector(x, d)
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > UNIT_NORM_RENORM_TOL:
        raise ValueError("not a unit vector: ||x|| = %.9g" % n)
    if n != 1.0:
        v = v / n
    return v


def sign_pm1(values):
    """Elementwise sign with sign(0) = +1, returning int labels."""
    arr = np.asarray(values)
    out = np.where(arr >= 0.0, 1, -1)
    if out.ndim == 0:
        return int(out)
    return out.astype(np.int64)


class Halfspace:
    """Classifier x -> sign(<w, x>) for a unit normal w."""

    def __init__(self, w):
        self.w = unit_vector(w)

    @property
    def dim(self):
        return self.w.size

    def margin(self, x):
        """Signed inner product <w, x>; accepts a vector or a matrix of rows."""
        x = np.asarray(x, dtype=np.float64)
        return x @ self.w

    def predict(self, x):
        return sign_pm1(self.margin(x))


def sign_label(h, x):
    """Label of x under halfspace h (sign(0) = +1)."""
    return h.predict(as_vector(x, h.dim))


def sample_unit_sphere(d, rng, size=None):
    """Uniform point(s) on the unit sphere in R^d.

    Gaussian draws normalized to length 1; with size=None returns one
    vector, otherwise a (size, d) matrix of rows.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    n = 1 if size is None else int(size)
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # probability zero, but stay total
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1)
    pts = g / norms[:, None]
    if size is None:
        return pts[0]
    return pts


def geometric_error(w_true, w_hat):
    """Euclidean distance ||w_true - w_hat||_2 between two normals."""
    a = as_vector(w_true)
    b = as_vector(w_hat, a.size)
    return float(np.linalg.norm(a - b))


def uniform_error_estimate(f_hat, f_star, sampler, n, seed):
    """Monte Carlo disagreement rate Pr[f_hat(x) != f_star(x)].

    sampler(n, rng) supplies the query distribution as an (n, d) matrix;
    both predictors must accept a matrix of rows. Deterministic for a
    fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = sampler(n, rng)
    ya = np.asarray(f_hat(x))
    yb = np.asarray(f_star(x))
    return float(np.mean(ya != yb))
