"""RBF-kernel support vector machines trained by SMO.

Models use the signed-coefficient convention: coefficients[i] carries
alpha_i * y_i, so presign(x) = sum_i coef_i K(x, sv_i) + b and dual
feasibility reads 0 <= y_i * coef_i <= C.
"""

import json

import numpy as np

from .geometry import sign_pm1


def rbf_kernel(A, B, gamma):
    """Pairwise exp(-gamma ||a - b||^2) for row sets A (n, d) and B (m, d)."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class KernelSvmModel:
    """RBF SVM with signed dual coefficients."""

    labels = (-1, 1)

    def __init__(self, support_vectors, coefficients, bias, gamma, C=None):
        self.support_vectors = np.atleast_2d(
            np.asarray(support_vectors, dtype=np.float64)
        )
        self.coefficients = np.asarray(coefficients, dtype=np.float64).ravel()
        if self.support_vectors.shape[0] != self.coefficients.size:
            raise ValueError("one coefficient per support vector required")
        self.bias = float(bias)
        self.gamma = float(gamma)
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        self.C = None if C is None else float(C)

    @property
    def dim(self):
        return self.support_vectors.shape[1]

    def presign(self, x):
        """Decision value(s) before the sign: sum_i coef_i K(x, sv_i) + b."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        K = rbf_kernel(np.atleast_2d(x), self.support_vectors, self.gamma)
        vals = K @ self.coefficients + self.bias
        return float(vals[0]) if single else vals

    def predict(self, x):
        return sign_pm1(self.presign(x))

    def to_json(self):
        return json.dumps(
            {
                "kind": "svm_rbf",
                "support_vectors": self.support_vectors.tolist(),
                "coefficients": self.coefficients.tolist(),
                "bias": self.bias,
                "gamma": self.gamma,
                "C": self.C,
            }
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("kind") != "svm_rbf":
            raise ValueError("not a serialized RBF SVM")
        return cls(
            obj["support_vectors"],
            obj["coefficients"],
            obj["bias"],
            obj["gamma"],
            obj.get("C"),
        )


def svm_presign(model, x):
    """Module-level alias for model.presign (the quantity EAT minimizes)."""
    return model.presign(x)


def svm_train(X, y, C=10.0, gamma=1.0, tol=1e-3, max_passes=5):
    """Train an RBF SVM by sequential minimal optimization.

    Each iteration updates the maximal violating pair (most positive KKT
    violation from the up set against the most negative from the down
    set), stopping once the violation gap falls within tol. Entirely
    deterministic: argmax ties resolve to the lowest index and no
    randomness is used. max_passes scales the safety cap on pair updates
    (max_passes * 50 * n); well-posed problems converge far earlier.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if X.shape[0] != n or n < 2:
        raise ValueError("need at least two labeled rows")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be in {-1, +1}")
    if C <= 0.0 or gamma <= 0.0:
        raise ValueError("C and gamma must be positive")

    K = rbf_kernel(X, X, gamma)
    alpha = np.zeros(n)
    F = np.zeros(n)  # K @ (alpha * y), maintained incrementally
    neg_inf = -np.inf
    max_iter = max(1000, int(max_passes) * 50 * n)

    for _ in range(max_iter):
        # KKT scores: -y_i * grad_i = y_i - F_i (bias cancels pairwise).
        score = y - F
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not (np.any(up) and np.any(low)):
            break
        i = int(np.argmax(np.where(up, score, neg_inf)))
        j = int(np.argmin(np.where(low, score, -neg_inf)))
        if score[i] - score[j] <= tol:
            break

        Ei, Ej = F[i] - y[i], F[j] - y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            L = max(0.0, aj_old - ai_old)
            H = min(C, C + aj_old - ai_old)
        else:
            L = max(0.0, ai_old + aj_old - C)
            H = min(C, ai_old + aj_old)
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta > -1e-12:
            eta = -1e-12
        aj = min(H, max(L, aj_old - y[j] * (Ei - Ej) / eta))
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        # Snap round-off onto the box so the strict up/low membership
        # tests stay exact; otherwise a variable parked 1e-13 inside a
        # bound reads as updatable and stalls the pair selection.
        if aj < 1e-10:
            aj = 0.0
        elif aj > C - 1e-10:
            aj = C
        if ai < 1e-10:
            ai = 0.0
        elif ai > C - 1e-10:
            ai = C
        if abs(aj - aj_old) < 1e-12 and abs(ai - ai_old) < 1e-12:
            break
        F += K[:, i] * (y[i] * (ai - ai_old)) + K[:, j] * (y[j] * (aj - aj_old))
        alpha[i], alpha[j] = ai, aj

    # Bias from the KKT margins: average y - F over free vectors when any
    # exist, else the midpoint of the feasible interval.
    score = y - F
    free = (alpha > 1e-8) & (alpha < C - 1e-8)
    if np.any(free):
        b = float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = score[up].max() if np.any(up) else 0.0
        lo = score[low].min() if np.any(low) else 0.0
        b = float(0.5 * (hi + lo))

    keep = alpha > 1e-8
    if not np.any(keep):
        # Degenerate but legal: decision function is the bare bias.
        return KernelSvmModel(X[:1], np.zeros(1), b, gamma, C)
    return KernelSvmModel(X[keep], alpha[keep] * y[keep], b, gamma, C)
