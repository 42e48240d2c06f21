"""Query oracles: hosted models, randomized defenses, and exact-cost ledgers.

An Oracle wraps a served model behind a label-only query interface. Every
query is metered by a QueryLedger whose dollar arithmetic is fixed-point
(integer micro-dollars), so reported costs are exact decimals for any
query count up to 10^9 and beyond.
"""

from decimal import Decimal

import numpy as np

from .geometry import Halfspace, as_vector, sign_pm1

MICRO = 10 ** 6


class BudgetExceeded(Exception):
    """Raised when a query would push the ledger past its budget."""


class ModeError(Exception):
    """Raised when an oracle is used in a mode its model does not support."""


class NoDefense:
    """Pass-through: the oracle returns the model's own label."""

    kind = "none"

    def __repr__(self):
        return "NoDefense()"


class ConstantFlip:
    """Flip each returned label independently with probability rho.

    Only meaningful for binary-labeled models; rho must lie in [0, 1/2)
    or majority voting cannot recover the clean label.
    """

    kind = "constant_flip"

    def __init__(self, rho):
        rho = float(rho)
        if not (0.0 <= rho < 0.5):
            raise ValueError("rho must be in [0, 0.5), got %g" % rho)
        self.rho = rho

    def __repr__(self):
        return "ConstantFlip(rho=%g)" % self.rho


class ModelRandomization:
    """Answer each query from a fresh perturbed model w' ~ N(w*, sigma^2 I).

    The perturbed normal is used unnormalized, and a new one is drawn for
    every query (including repeats of the same x). Halfspace models only.
    """

    kind = "model_randomization"

    def __init__(self, sigma):
        sigma = float(sigma)
        if sigma < 0.0:
            raise ValueError("sigma must be >= 0, got %g" % sigma)
        self.sigma = sigma

    def __repr__(self):
        return "ModelRandomization(sigma=%g)" % self.sigma


def _price_to_micro(price):
    """Dollars-per-query -> integer micro-dollars, rejecting inexact prices."""
    if isinstance(price, Decimal):
        dec = price
    else:
        dec = Decimal(str(price))
    micro = dec * MICRO
    if micro != micro.to_integral_value():
        raise ValueError("price %s is not an exact micro-dollar amount" % dec)
    if micro < 0:
        raise ValueError("price must be >= 0")
    return int(micro)


class QueryLedger:
    """Counts queries and prices them exactly.

    budget=None means unlimited. Charging is all-or-nothing: a batch that
    would cross the budget raises BudgetExceeded without consuming it.
    """

    def __init__(self, price_per_query="0.0", budget=None):
        self.price_micro = _price_to_micro(price_per_query)
        if budget is not None:
            budget = int(budget)
            if budget < 0:
                raise ValueError("budget must be >= 0")
        self.budget = budget
        self.count = 0

    def charge(self, k=1):
        if k < 0:
            raise ValueError("cannot charge a negative count")
        if self.budget is not None and self.count + k > self.budget:
            raise BudgetExceeded(
                "budget %d exhausted (count %d, requested %d)"
                % (self.budget, self.count, k)
            )
        self.count += k

    @property
    def remaining(self):
        if self.budget is None:
            return None
        return self.budget - self.count

    @property
    def cost(self):
        """Exact dollars spent so far, as a Decimal."""
        return Decimal(self.count) * (Decimal(self.price_micro) / Decimal(MICRO))


def ledger_cost(count, price_per_query):
    """Exact dollar cost of `count` queries at the given per-query price.

    Keeps the price's decimal scale, so 900 queries at 0.0001 print as
    0.0900 rather than a renormalized 0.09.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    micro = _price_to_micro(price_per_query)
    return Decimal(int(count)) * (Decimal(micro) / Decimal(MICRO))


class LinearRegression:
    """Leaky real-valued model f(x) = a0 + sum_i a_i x_i."""

    def __init__(self, coeffs):
        self.coeffs = as_vector(coeffs)
        if self.coeffs.size < 2:
            raise ValueError("need an intercept plus at least one weight")

    @property
    def dim(self):
        return self.coeffs.size - 1

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.coeffs[0] + x @ self.coeffs[1:]


def _is_binary_model(model):
    labels = getattr(model, "labels", None)
    if labels is not None:
        return len(set(int(l) for l in labels)) <= 2
    return isinstance(model, Halfspace) or hasattr(model, "presign")


class Oracle:
    """Label-only (or, in leaky mode, real-valued) access to a served model.

    Parameters
    ----------
    model : served model exposing predict() (or value() in leaky mode)
    defense : NoDefense | ConstantFlip | ModelRandomization
    ledger : QueryLedger metering every answered query
    rng : numpy Generator driving the defense's randomness
    leaky : if True the oracle exposes query_real; LinearRegression only
    """

    def __init__(self, model, defense=None, ledger=None, rng=None, leaky=False):
        self.model = model
        self.defense = defense if defense is not None else NoDefense()
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.leaky = bool(leaky)
        if self.leaky and not isinstance(model, LinearRegression):
            raise ModeError("leaky mode is only defined for LinearRegression")
        if isinstance(model, LinearRegression) and not self.leaky:
            raise ModeError("LinearRegression is served in leaky mode only")
        if isinstance(self.defense, ModelRandomization) and not isinstance(
            model, Halfspace
        ):
            raise ModeError("ModelRandomization defends halfspace models only")
        if isinstance(self.defense, ConstantFlip):
            if isinstance(model, LinearRegression) or not _is_binary_model(model):
                raise ModeError("ConstantFlip defends binary-labeled models only")

    @property
    def dim(self):
        return self.model.dim

    # -- label interface ----------------------------------------------------

    def query(self, x):
        """One defended label for x; charges the ledger exactly 1."""
        if self.leaky:
            raise ModeError("leaky oracle answers query_real only")
        x = as_vector(x, self.dim)
        self.ledger.charge(1)
        return int(self._answer(x[None, :], 1)[0])

    def query_many(self, x, r):
        """r independent defended labels for the same x; charges exactly r."""
        if self.leaky:
            raise ModeError("leaky oracle answers query_real only")
        x = as_vector(x, self.dim)
        r = int(r)
        if r < 1:
            raise ValueError("r must be >= 1")
        self.ledger.charge(r)
        return self._answer(x[None, :], r)

    def query_batch(self, X):
        """One defended label per row of X; charges len(X)."""
        if self.leaky:
            raise ModeError("leaky oracle answers query_real only")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError("expected an (n, %d) matrix" % self.dim)
        self.ledger.charge(X.shape[0])
        return self._answer(X, None)

    def query_real(self, x):
        """Leaky real-valued answer; ModeError unless leaky=True."""
        if not self.leaky:
            raise ModeError("query_real requires a leaky oracle")
        x = as_vector(x, self.dim)
        self.ledger.charge(1)
        return float(self.model.value(x))

    # -- internals ----------------------------------------------------------

    def _answer(self, X, repeat):
        """Defended labels: X is (n, d); repeat=r means n == 1 asked r times."""
        d = self.defense
        if isinstance(d, ModelRandomization):
            n = repeat if repeat is not None else X.shape[0]
            # sign(<w* + sigma g, x>) = sign(<w*, x> + sigma <g, x>) with
            # <g, x> ~ N(0, ||x||^2), so one normal per query suffices.
            base = X @ self.model.w
            if repeat is not None:
                base = np.repeat(base, repeat)
            noise = self.rng.standard_normal(n) * (np.linalg.norm(X, axis=1) if repeat is None else np.linalg.norm(X[0]))
            return sign_pm1(base + d.sigma * noise)
        clean = self.model.predict(X)
        clean = np.atleast_1d(np.asarray(clean))
        if repeat is not None:
            clean = np.repeat(clean, repeat)
        if isinstance(d, ConstantFlip):
            flips = self.rng.random(clean.size) < d.rho
            return np.where(flips, -clean, clean).astype(np.int64)
        return clean.astype(np.int64)
