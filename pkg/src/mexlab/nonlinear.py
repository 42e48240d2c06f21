"""Extraction of nonlinear models: adaptive SVM stealing and importance-
weighted active learning (IWAL) for trees and forests.

EAT queries the pool point with the smallest |presign| each round and
retrains from scratch, spending its label budget on the extracted
boundary. IWAL processes a stream, querying each instance with the
probability implied by the loss gap between the current hypothesis and
its best disagreeing alternative; alternatives come from single-leaf
surgery on trees and majority-breaking leaf flips on forests.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from .halfspace import ExtractionReport, _ledgered
from .svm import svm_train
from .trees import DecisionTree, RandomForest, dt_train_weighted, rf_train_weighted


def _as_samples(S):
    """Normalize a sample set to (X, y, p) arrays.

    Accepts a list of (x, y, p) triples or an already-split tuple.
    """
    if isinstance(S, tuple) and len(S) == 3:
        X, y, p = S
        return (
            np.atleast_2d(np.asarray(X, dtype=np.float64)),
            np.asarray(y, dtype=np.int64).ravel(),
            np.asarray(p, dtype=np.float64).ravel(),
        )
    if len(S) == 0:
        return np.zeros((0, 0)), np.zeros(0, dtype=np.int64), np.zeros(0)
    X = np.vstack([np.asarray(x, dtype=np.float64) for x, _, _ in S])
    y = np.array([int(y_) for _, y_, _ in S], dtype=np.int64)
    p = np.array([float(p_) for _, _, p_ in S], dtype=np.float64)
    return X, y, p


def importance_weighted_error(h, S, n):
    """(1/n) sum over S of (1/p) [h(x) != y]; 0 for an empty sample set.

    n is the processed-instance count of the stream, not |S|.
    """
    X, y, p = _as_samples(S)
    if y.size == 0:
        return 0.0
    if n < 1:
        raise ValueError("n must be >= 1 once S is nonempty")
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ValueError("query probabilities must lie in (0, 1]")
    wrong = (np.asarray(h.predict(X)) != y).astype(np.float64)
    return float(np.sum(wrong / p) / n)


def iwal_threshold(n, c0):
    """Querying threshold mu(n) = sqrt(c0 log n / (n-1)) + c0 log n / (n-1)."""
    if n < 2:
        raise ValueError("threshold is defined for n >= 2")
    if c0 < 0.0:
        raise ValueError("c0 must be >= 0")
    t = c0 * math.log(n) / (n - 1)
    return math.sqrt(t) + t


def iwal_solve_s(G, n, c0, c1=1.0, c2=1.0):
    """Query probability s solving
    G = (c1/(sqrt(s)-c1+1)) A + (c2/(sqrt(s)-c2+1)) B
    with A = sqrt(c0 log n/(n-1)), B = c0 log n/(n-1).

    c1 = c2 = 1 collapses to the closed form s = ((A+B)/G)^2. Results are
    clamped into (0, 1]; an equation with no root in range clamps to the
    nearer endpoint with a warning.
    """
    if G <= 0.0:
        raise ValueError("G must be positive (G <= mu(n) means query surely)")
    B = c0 * math.log(n) / (n - 1)
    A = math.sqrt(B)
    if c1 == 1.0 and c2 == 1.0:
        return min(1.0, ((A + B) / G) ** 2)
    if c1 < 1.0 or c2 < 1.0:
        raise ValueError("general-case solver expects c1, c2 >= 1")

    def g(t):
        return c1 * A / (t - c1 + 1.0) + c2 * B / (t - c2 + 1.0) - G

    lo = max(c1, c2) - 1.0 + 1e-12
    hi = 1.0
    if g(hi) > 0.0:
        warnings.warn("no root in (0, 1]; clamping query probability to 1")
        return 1.0
    # g decreases from +inf near lo to g(1) <= 0: bisect on sqrt(s)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    return min(1.0, max(t * t, 1e-24))


def tree_alternative(h, x, S, n):
    """Best tree disagreeing with h at x via single-leaf relabeling.

    Tries every label l != h(x) for the leaf x lands in and returns the
    relabeled tree of minimum importance-weighted error; ties go to the
    lower label.
    """
    x = np.asarray(x, dtype=np.float64)
    leaf = h.leaf_for(x)
    current = int(leaf.label)
    best = None
    best_err = None
    for l in h.labels:
        if l == current:
            continue
        cand = h.clone_with_leaf(leaf.node_id, l)
        err = importance_weighted_error(cand, S, n)
        if best is None or err < best_err:
            best, best_err = cand, err
    if best is None:
        raise ValueError("tree has a single label; no disagreeing alternative")
    return best


def forest_alternative(rf, x, S, n, sample_count=50, rng=None):
    """Best forest disagreeing with rf at x by flipping j agreeing trees.

    With r trees agreeing with the majority at x, j = r - floor(o/2) + 1
    flips are enough to swing the vote. All C(r, j) flip sets are tried
    when there are at most sample_count of them, otherwise sample_count
    random draws; minimum importance-weighted error wins.
    """
    x = np.asarray(x, dtype=np.float64)
    majority = int(rf.predict(x))
    agree = [i for i, t in enumerate(rf.trees) if int(t.predict(x)) == majority]
    r = len(agree)
    j = min(r, r - rf.o // 2 + 1)

    n_combos = math.comb(r, j)
    if n_combos <= sample_count:
        combos = itertools.combinations(agree, j)
    else:
        if rng is None:
            raise ValueError("rng required when sampling flip sets")
        combos = (
            tuple(rng.choice(agree, size=j, replace=False)) for _ in range(sample_count)
        )

    best = None
    best_err = None
    for combo in combos:
        trees = list(rf.trees)
        for i in combo:
            leaf = trees[i].leaf_for(x)
            trees[i] = trees[i].clone_with_leaf(leaf.node_id, -int(leaf.label))
        cand = RandomForest(trees)
        err = importance_weighted_error(cand, S, n)
        if best is None or err < best_err:
            best, best_err = cand, err
    if int(best.predict(x)) == majority:
        raise AssertionError("alternative failed to flip the vote")
    return best


@dataclass
class IwalState:
    """Stream position and labeled sample set of an IWAL run."""

    n: int = 0
    X: list = field(default_factory=list)
    y: list = field(default_factory=list)
    p: list = field(default_factory=list)
    h: object = None

    @property
    def samples(self):
        if not self.y:
            return np.zeros((0, 0)), np.zeros(0, dtype=np.int64), np.zeros(0)
        return (
            np.vstack(self.X),
            np.array(self.y, dtype=np.int64),
            np.array(self.p, dtype=np.float64),
        )


def iwal_extract(
    oracle,
    pool,
    learner="tree",
    budget=None,
    c0=8.0,
    c1=1.0,
    c2=1.0,
    seed_size=20,
    learner_params=None,
    rng=None,
    eval_set=None,
    repeat_pool=False,
    cadence=1,
    sample_count=50,
):
    """Extract a tree or forest with importance-weighted active learning.

    The first seed_size stream instances are queried surely (p = 1, the
    threshold is undefined at n = 1); afterwards each instance is queried
    with probability 1 if the loss gap G between the current hypothesis
    and its best disagreeing alternative is at most mu(n), else with the
    solved probability s(n). Stops at the label budget or pool end
    (repeat_pool cycles the pool instead). cadence batches retraining:
    the model is refit every cadence-th stored label.
    """
    if learner not in ("tree", "forest"):
        raise ValueError("learner must be 'tree' or 'forest'")
    if seed_size < 1:
        raise ValueError("seed_size must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    params = dict(learner_params or {})
    report = _ledgered(
        oracle,
        _iwal_extract,
        oracle,
        np.atleast_2d(np.asarray(pool, dtype=np.float64)),
        learner,
        budget,
        c0,
        c1,
        c2,
        seed_size,
        params,
        rng,
        eval_set,
        repeat_pool,
        cadence,
        sample_count,
    )
    return report.w_hat, report


def _retrain(learner, state, params, rng):
    X, y, p = state.samples
    w = 1.0 / p
    if learner == "tree":
        return dt_train_weighted(X, y, w, **params)
    return rf_train_weighted(X, y, w, rng=rng, **params)


def _iwal_extract(
    oracle,
    pool,
    learner,
    budget,
    c0,
    c1,
    c2,
    seed_size,
    params,
    rng,
    eval_set,
    repeat_pool,
    cadence,
    sample_count,
):
    state = IwalState()
    queried = 0
    pending = 0  # stored labels since last retrain
    S = state.samples  # cached array view, rebuilt when labels are stored

    stream = itertools.cycle(pool) if repeat_pool else iter(pool)
    for x in stream:
        if budget is not None and queried >= budget:
            break
        state.n += 1
        n = state.n
        if n <= seed_size or state.h is None or len(state.h.labels) < 2:
            # No hypothesis yet, or it has only ever seen one label, so no
            # disagreeing alternative exists; query surely until one does.
            p = 1.0
        else:
            if learner == "tree":
                alt = tree_alternative(state.h, x, S, n - 1)
            else:
                alt = forest_alternative(
                    state.h, x, S, n - 1, sample_count=sample_count, rng=rng
                )
            e_h = importance_weighted_error(state.h, S, n - 1)
            e_alt = importance_weighted_error(alt, S, n - 1)
            G = max(0.0, e_alt - e_h)
            mu = iwal_threshold(n, c0)
            p = 1.0 if G <= mu else iwal_solve_s(G, n, c0, c1, c2)
        if rng.random() < p:
            y = oracle.query(x)
            queried += 1
            state.X.append(np.asarray(x, dtype=np.float64))
            state.y.append(int(y))
            state.p.append(float(p))
            S = state.samples
            pending += 1
            if pending >= cadence or len(state.y) == seed_size:
                state.h = _retrain(learner, state, params, rng)
                pending = 0

    if state.h is None:
        raise ValueError("no labels queried; budget or pool too small")
    if pending:
        state.h = _retrain(learner, state, params, rng)

    extras = {
        "processed": state.n,
        "labels": len(state.y),
        "seed_size": seed_size,
        "state": state,
        "queried_fraction_post_seed": (
            (len(state.y) - seed_size) / (state.n - seed_size)
            if state.n > seed_size
            else 1.0
        ),
    }
    report = ExtractionReport(state.h, 0, Decimal(0), "Success", extras=extras)
    if eval_set is not None:
        Xe, ye = eval_set
        report.accuracy = float(
            np.mean(np.asarray(state.h.predict(Xe)) == np.asarray(ye))
        )
    return report


def eat_extract_svm(
    oracle,
    domain_box,
    r_init=None,
    k=100,
    budget=300,
    svm_params=None,
    rng=None,
    eval_set=None,
    trace=None,
):
    """Adversarial SVM extraction: always label the least-certain candidate.

    Stage 0 queries r_init uniform points from domain_box (redrawing the
    whole batch, at most 100 times, until both labels appear) and trains
    an initial model. Each round then draws k unlabeled candidates, sends
    the one with minimum |presign| to the oracle, and retrains from
    scratch, until the query budget is spent.
    """
    d = oracle.dim
    if r_init is None:
        r_init = max(20, d + 1)
    if r_init < 2 or k < 1:
        raise ValueError("need r_init >= 2 and k >= 1")
    if budget <= r_init:
        raise ValueError("budget must exceed r_init")
    if rng is None:
        rng = np.random.default_rng()
    box = np.asarray(domain_box, dtype=np.float64)
    if box.shape != (d, 2) or np.any(box[:, 1] < box[:, 0]):
        raise ValueError("domain_box must be (d, 2) rows of [lo, hi]")
    params = dict(svm_params or {})
    params.setdefault("C", 10.0)
    params.setdefault("gamma", 1.0)
    report = _ledgered(
        oracle, _eat_extract, oracle, box, r_init, k, budget, params, rng, eval_set, trace
    )
    return report.w_hat, report


def _uniform_box(box, n, rng):
    lo, hi = box[:, 0], box[:, 1]
    return lo + rng.random((n, box.shape[0])) * (hi - lo)


def _eat_extract(oracle, box, r_init, k, budget, svm_params, rng, eval_set, trace):
    used = 0
    for attempt in range(100):
        X = _uniform_box(box, r_init, rng)
        y = oracle.query_batch(X)
        used += r_init
        if np.unique(y).size == 2:
            break
        if used + r_init > budget:
            raise RuntimeError("budget exhausted before both labels appeared")
    else:
        raise RuntimeError("no second label in 100 initial draws")

    model = svm_train(X, y.astype(np.float64), **svm_params)
    rounds = 0
    while used < budget:
        cand = _uniform_box(box, k, rng)
        scores = np.abs(model.presign(cand))
        pick = int(np.argmin(scores))
        assert scores[pick] == scores.min()
        if trace is not None:
            trace.append({"round": rounds, "scores": scores, "pick": pick})
        y_new = oracle.query(cand[pick])
        used += 1
        rounds += 1
        X = np.vstack([X, cand[pick]])
        y = np.append(y, y_new)
        model = svm_train(X, y.astype(np.float64), **svm_params)

    extras = {"rounds": rounds, "r_init": r_init, "train_size": int(y.size)}
    report = ExtractionReport(model, 0, Decimal(0), "Success", extras=extras)
    if eval_set is not None:
        Xe, ye = eval_set
        report.accuracy = float(np.mean(np.asarray(model.predict(Xe)) == np.asarray(ye)))
    return report
