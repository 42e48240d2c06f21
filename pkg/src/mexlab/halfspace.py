"""Halfspace extraction attacks against label-only query oracles.

The query-synthesis extractor recovers a unit normal w by angular
bisection on two-coordinate arcs: points x(theta) = cos(theta) e_j +
sin(theta) e_k cross the boundary at theta* with cot(theta*) = -w_k/w_j,
so a label-only bisection on theta pins the weight ratio w_k/w_j. A
coarse pass against coordinate 0 picks the largest-magnitude coordinate
as pivot, a full-depth pass then measures every ratio against the pivot,
which keeps boundary angles away from the singular theta = 0.

Also here: the majority-vote repetition wrapper for flip noise, the
averaging attack that defeats model-randomization defenses, a simplified
Lowd-Meek baseline, and exact equation solving for leaky linear
regression oracles.
"""

import math
import time
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from .geometry import as_vector, sample_unit_sphere
from .defense_analysis import stability_stop

HALF_PI = math.pi / 2.0


@dataclass
class ExtractionReport:
    """What an attack run produced and what it cost."""

    w_hat: object
    queries_used: int
    cost: Decimal
    outcome: str  # Success | Fail | BudgetExceeded
    err2: float | None = None
    accuracy: float | None = None
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)


@dataclass
class BisectionPlan:
    """Depth schedule for the two-phase angular bisection extractor.

    pivot=None lets the coarse phase choose the pivot coordinate; a fixed
    index skips that choice (used by tests).
    """

    depth_coarse: int = 6
    depth_full: int = 20
    target_eps: float = 1e-3
    pivot: int | None = None

    def __post_init__(self):
        if not (1 <= self.depth_coarse <= self.depth_full):
            raise ValueError("need 1 <= depth_coarse <= depth_full")
        if not (self.target_eps > 0.0):
            raise ValueError("target_eps must be positive")

    @classmethod
    def default(cls, d, eps):
        """Depth ceil(log2(4 sqrt(d)/eps)) converts per-ratio angular
        precision into geometric error with empirical safety margin."""
        if d < 1:
            raise ValueError("d must be >= 1")
        if not (0.0 < eps < 1.0):
            raise ValueError("eps must be in (0, 1)")
        coarse = 6
        full = max(coarse, math.ceil(math.log2(4.0 * math.sqrt(d) / eps)))
        return cls(depth_coarse=coarse, depth_full=full, target_eps=eps)


def plan_query_bound(d, plan):
    """Worst-case labeled points for a plan: d (depth_full + depth_coarse + 2)."""
    return d * (plan.depth_full + plan.depth_coarse + 2)


def _arc_point(d, j, k, theta):
    x = np.zeros(d)
    x[j] = math.cos(theta)
    x[k] = math.sin(theta)
    return x


def _bracket_from_probes(lm, l0, lp):
    """Initial sign-change bracket on [-pi/2, pi/2], or None when the three
    probe labels agree (w_k = 0 with positive w_j: ratio is 0)."""
    if lm == l0 == lp:
        return None
    if l0 != lp:
        return [0.0, HALF_PI, l0]
    return [-HALF_PI, 0.0, lm]


def _bracket_ratio(bracket):
    """Ratio estimate -cos/sin at the current bracket midpoint."""
    if bracket is None:
        return 0.0
    theta = 0.5 * (bracket[0] + bracket[1])
    return -math.cos(theta) / math.sin(theta)


def _bisect_step(bracket, label, d, j, k, record=None):
    """Halve the bracket with one midpoint query; returns the queried point."""
    lo, hi, flo = bracket
    mid = 0.5 * (lo + hi)
    x = _arc_point(d, j, k, mid)
    if record is not None:
        record.append(x)
    if label(x) == flo:
        bracket[0] = mid
    else:
        bracket[1] = mid
    return x


def angular_bisect(oracle, j, k, depth, labeler=None, d=None):
    """Estimate the weight ratio w_k / w_j by bisection on the (j, k) arc.

    Issues 3 + depth queries: three probes at theta in {-pi/2, 0, pi/2}
    and one per halving. Returns 0 when all probes agree.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if d is None:
        d = oracle.dim
    if j == k or not (0 <= j < d and 0 <= k < d):
        raise ValueError("need distinct coordinates j, k in range")
    label = labeler if labeler is not None else oracle.query
    lm = label(_arc_point(d, j, k, -HALF_PI))
    l0 = label(_arc_point(d, j, k, 0.0))
    lp = label(_arc_point(d, j, k, HALF_PI))
    bracket = _bracket_from_probes(lm, l0, lp)
    if bracket is None:
        return 0.0
    for _ in range(depth):
        _bisect_step(bracket, label, d, j, k)
    return _bracket_ratio(bracket)


class _CachedProbes:
    """Labels of the axis points +/- e_i, queried at most once each."""

    def __init__(self, d, label, record):
        self.d = d
        self.label = label
        self.record = record
        self.cache = {}

    def __call__(self, i, sgn):
        key = (i, sgn)
        if key not in self.cache:
            x = np.zeros(self.d)
            x[i] = float(sgn)
            self.record.append(x)
            self.cache[key] = self.label(x)
        return self.cache[key]


def _ledgered(oracle, fn, *args, **kwargs):
    """Run fn, filling query/cost/time accounting from the oracle's ledger."""
    ledger = oracle.ledger
    count0 = ledger.count
    cost0 = ledger.cost
    t0 = time.perf_counter()
    report = fn(*args, **kwargs)
    report.wall_time = time.perf_counter() - t0
    report.queries_used = ledger.count - count0
    report.cost = ledger.cost - cost0
    return report


def _coarse_pivot(d, plan, label, probe, record):
    """Phase 1: depth-limited ratios of every coordinate against coordinate 0;
    pivot is the largest coordinate of the provisional normal."""
    if plan.pivot is not None:
        if not (0 <= plan.pivot < d):
            raise ValueError("plan pivot out of range")
        return plan.pivot
    clamp = float(2 ** plan.depth_coarse)
    provisional = np.zeros(d)
    provisional[0] = 1.0
    for k in range(1, d):
        bracket = _bracket_from_probes(probe(k, -1), probe(0, +1), probe(k, +1))
        if bracket is None:
            continue
        for _ in range(plan.depth_coarse):
            _bisect_step(bracket, label, d, 0, k, record)
        provisional[k] = float(np.clip(_bracket_ratio(bracket), -clamp, clamp))
    return int(np.argmax(np.abs(provisional)))


def qs_extract_halfspace(oracle, d, eps, plan=None, labeler=None):
    """Extract a served halfspace by two-phase angular bisection.

    Uses at most d (depth_full + depth_coarse + 2) labeled points (axis
    probes are cached, so the realized count is lower). The labeler hook
    replaces oracle.query per labeled point; the majority-vote noisy
    wrapper goes through it.
    """
    if plan is None:
        plan = BisectionPlan.default(d, eps)
    return _ledgered(oracle, _qs_extract, oracle, d, eps, plan, labeler)


def _qs_extract(oracle, d, eps, plan, labeler):
    label = labeler if labeler is not None else oracle.query
    probes_log, coarse_log, refine_log = [], [], []
    probe = _CachedProbes(d, label, probes_log)
    extras = {
        "plan": plan,
        "queries_probe": probes_log,
        "queries_coarse": coarse_log,
        "queries_refine": refine_log,
    }
    if d == 1:
        w_hat = np.array([float(probe(0, +1))])
        extras["pivot"] = 0
        return ExtractionReport(w_hat, 0, Decimal(0), "Success", extras=extras)

    pivot = _coarse_pivot(d, plan, label, probe, coarse_log)
    extras["pivot"] = pivot

    u = np.zeros(d)
    u[pivot] = 1.0
    for k in range(d):
        if k == pivot:
            continue
        bracket = _bracket_from_probes(probe(k, -1), probe(pivot, +1), probe(k, +1))
        if bracket is None:
            continue
        for _ in range(plan.depth_full):
            _bisect_step(bracket, label, d, pivot, k, refine_log)
        u[k] = _bracket_ratio(bracket)

    w_hat = float(probe(pivot, +1)) * u / np.linalg.norm(u)
    return ExtractionReport(w_hat, 0, Decimal(0), "Success", extras=extras)


def qs_extract_stability(oracle, d, N, tau, max_depth=40, plan=None, labeler=None):
    """Bisection extractor with a stability stopping rule instead of a
    fixed refine depth.

    The refine phase deepens all pairs in lockstep, one bisection step
    per pair per level, recording the running normal estimate at a
    half-sweep cadence (every max(1, pairs // 2) steps). It stops once
    the last N successive recorded deltas all fall at or below tau (see
    stability_stop), or at max_depth levels. The cadence matters: deltas
    between single steps understate movement (one coordinate of many) and
    full-sweep deltas make the rule pay N extra sweeps after convergence;
    half sweeps track the same decay at two points per level.
    """
    if plan is None:
        plan = BisectionPlan(depth_coarse=6, depth_full=max(max_depth, 6))
    return _ledgered(
        oracle, _qs_extract_stability, oracle, d, N, tau, max_depth, plan, labeler
    )


def _qs_extract_stability(oracle, d, N, tau, max_depth, plan, labeler):
    label = labeler if labeler is not None else oracle.query
    probes_log, coarse_log, refine_log = [], [], []
    probe = _CachedProbes(d, label, probes_log)
    extras = {
        "queries_probe": probes_log,
        "queries_coarse": coarse_log,
        "queries_refine": refine_log,
    }
    if d == 1:
        w_hat = np.array([float(probe(0, +1))])
        return ExtractionReport(w_hat, 0, Decimal(0), "Success", extras=extras)

    pivot = _coarse_pivot(d, plan, label, probe, coarse_log)
    extras["pivot"] = pivot

    sgn = float(probe(pivot, +1))
    brackets = {}
    u = np.zeros(d)
    u[pivot] = 1.0
    for k in range(d):
        if k == pivot:
            continue
        brackets[k] = _bracket_from_probes(
            probe(k, -1), probe(pivot, +1), probe(k, +1)
        )
        u[k] = _bracket_ratio(brackets[k])

    live = [k for k in sorted(brackets) if brackets[k] is not None]
    cadence = max(1, len(live) // 2)
    history = [sgn * u / np.linalg.norm(u)]
    fired = False
    level = 0
    steps = 0
    for level in range(1, max_depth + 1):
        for k in live:
            _bisect_step(brackets[k], label, d, pivot, k, refine_log)
            u[k] = _bracket_ratio(brackets[k])
            steps += 1
            if steps % cadence == 0:
                history.append(sgn * u / np.linalg.norm(u))
                if stability_stop(history, N, tau):
                    fired = True
                    break
        if fired:
            break

    extras["stability_fired"] = fired
    extras["levels"] = level
    extras["history_len"] = len(history)
    return ExtractionReport(history[-1], 0, Decimal(0), "Success", extras=extras)


def repetition_count(rho, q_base, delta):
    """Votes per label so that all q_base majority votes are clean with
    probability >= 1 - 2 delta: ceil(8 / (1 - 2 rho)^2 * ln(q_base / delta)).

    rho = 0 needs no repetition and returns 1.
    """
    rho = float(rho)
    if not (0.0 <= rho < 0.5):
        raise ValueError("rho must be in [0, 0.5)")
    if q_base < 1:
        raise ValueError("q_base must be >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0, 1)")
    if rho == 0.0:
        return 1
    return math.ceil(8.0 / (1.0 - 2.0 * rho) ** 2 * math.log(q_base / delta))


def majority_vote_query(oracle, x, r):
    """Majority label over r independent queries of x; ties go to +1."""
    labels = oracle.query_many(x, r)
    return 1 if int(labels.sum()) >= 0 else -1


def noisy_qs_extract(oracle, d, eps, delta, rho, plan=None):
    """Bisection extraction through a flip-noise oracle, every label taken
    by majority vote over r = repetition_count(rho, q_base, delta) repeats,
    q_base being the plan's worst-case labeled-point count."""
    if plan is None:
        plan = BisectionPlan.default(d, eps)
    q_base = plan_query_bound(d, plan)
    r = repetition_count(rho, q_base, delta)
    labeler = lambda x: majority_vote_query(oracle, x, r)
    report = qs_extract_halfspace(oracle, d, eps, plan=plan, labeler=labeler)
    report.extras["repetition"] = r
    report.extras["q_base"] = q_base
    return report


def average_attack_m(d, eps, sigma_hat, delta):
    """Sample size (15 pi)^2 / eps^2 * d * max(1, d sigma_hat^2) * ln(2d/delta)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (eps > 0.0 and 0.0 < delta < 1.0 and sigma_hat > 0.0):
        raise ValueError("need eps > 0, sigma_hat > 0, delta in (0, 1)")
    return math.ceil(
        (15.0 * math.pi) ** 2
        / eps ** 2
        * d
        * max(1.0, d * sigma_hat ** 2)
        * math.log(2.0 * d / delta)
    )


def average_attack(oracle, d, sigma_hat, eps, delta, rng, chunk=1 << 18):
    """Label-averaging attack on a randomization-defended halfspace.

    Draws m uniform sphere points, averages y_i x_i, and declares Success
    when the mean's length reaches l = 1/(12 d sigma_hat), returning the
    normalized mean as w_hat. When the defense's true sigma is much larger
    than sigma_hat the mean collapses below l and the attack reports Fail
    rather than an estimate.
    """
    if sigma_hat < 1.0 / math.sqrt(d):
        raise ValueError("sigma_hat must be >= 1/sqrt(d)")
    return _ledgered(
        oracle, _average_attack, oracle, d, sigma_hat, eps, delta, rng, chunk
    )


def _average_attack(oracle, d, sigma_hat, eps, delta, rng, chunk):
    m = average_attack_m(d, eps, sigma_hat, delta)
    threshold = 1.0 / (12.0 * d * sigma_hat)
    v = np.zeros(d)
    done = 0
    while done < m:
        n = min(chunk, m - done)
        X = sample_unit_sphere(d, rng, size=n)
        y = oracle.query_batch(X)
        v += y @ X
        done += n
    v /= m
    v_norm = float(np.linalg.norm(v))
    extras = {"m": m, "threshold": threshold, "v_norm": v_norm}
    if v_norm >= threshold:
        return ExtractionReport(v / v_norm, 0, Decimal(0), "Success", extras=extras)
    return ExtractionReport(None, 0, Decimal(0), "Fail", extras=extras)


def lowd_meek_extract(oracle, d, eps_ls, rng, probe_budget=100):
    """Simplified Lowd-Meek extraction for noise-free halfspace oracles.

    Finds one positive and one negative witness, bisects the segment
    between them down to a near-boundary point x0, then recovers each
    weight ratio by a line search: after a unit perturbation along e_i,
    bisect the coefficient t of a reference coordinate until
    x0 + e_i + t e_ref returns to the boundary, giving t ~= -w_i / w_ref.
    Fixed search bracket [-B, B] with B = 1e6 * eps_ls.
    """
    if not (0.0 < eps_ls < 1.0):
        raise ValueError("eps_ls must be in (0, 1)")
    return _ledgered(oracle, _lowd_meek, oracle, d, eps_ls, rng, probe_budget)


def _lowd_meek(oracle, d, eps_ls, rng, probe_budget):
    extras = {}

    # Witnesses of both labels among random sphere probes.
    x_pos = x_neg = None
    probes = 0
    while (x_pos is None or x_neg is None) and probes < probe_budget:
        x = sample_unit_sphere(d, rng)
        probes += 1
        if oracle.query(x) > 0:
            if x_pos is None:
                x_pos = x
        elif x_neg is None:
            x_neg = x
    extras["witness_probes"] = probes
    if x_pos is None or x_neg is None:
        return ExtractionReport(None, 0, Decimal(0), "Fail", extras=extras)

    # Bisect the witness segment to a boundary point; the tighter this is,
    # the smaller the common bias h = <w, x0> in every ratio estimate.
    seg_tol = eps_ls / (2.0 * math.sqrt(d))
    a, b = x_pos, x_neg
    while float(np.linalg.norm(a - b)) > seg_tol:
        mid = 0.5 * (a + b)
        if oracle.query(mid) > 0:
            a = mid
        else:
            b = mid
    x0 = 0.5 * (a + b)
    extras["boundary_point"] = x0

    # Reference coordinate: first one whose sign survives the boundary
    # offset, i.e. labels of x0 + e_i and x0 - e_i differ.
    ref = None
    ref_sign = 0
    e = np.eye(d)
    for i in range(d):
        lp = oracle.query(x0 + e[i])
        lm = oracle.query(x0 - e[i])
        if lp != lm:
            ref = i
            ref_sign = lp
            break
    if ref is None:
        return ExtractionReport(None, 0, Decimal(0), "Fail", extras=extras)
    extras["ref"] = ref

    B = 1e6 * eps_ls
    t_tol = eps_ls / 4.0
    u = np.zeros(d)
    u[ref] = 1.0
    for i in range(d):
        if i == ref:
            continue
        base = x0 + e[i]
        llo = oracle.query(base - B * e[ref])
        lhi = oracle.query(base + B * e[ref])
        if llo == lhi:
            return ExtractionReport(None, 0, Decimal(0), "Fail", extras=extras)
        lo, hi = -B, B
        while hi - lo > t_tol:
            mid = 0.5 * (lo + hi)
            if oracle.query(base + mid * e[ref]) == llo:
                lo = mid
            else:
                hi = mid
        u[i] = -0.5 * (lo + hi)

    w_hat = float(ref_sign) * u / np.linalg.norm(u)
    return ExtractionReport(w_hat, 0, Decimal(0), "Success", extras=extras)


def equation_solve_regression(oracle, d):
    """Recover a leaky linear regression exactly with d + 1 real queries.

    Queries the origin and each standard basis point, then solves the
    (d+1) x (d+1) linear system for (a0, a1, ..., ad).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    points = np.vstack([np.zeros(d), np.eye(d)])
    values = np.array([oracle.query_real(x) for x in points])
    system = np.hstack([np.ones((d + 1, 1)), points])
    return np.linalg.solve(system, values)
