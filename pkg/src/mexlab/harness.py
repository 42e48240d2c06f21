"""Experiment harness: versioned JSON configs, seeded trials, sweeps.

Trial i of a run is seeded by SeedSequence(seed, spawn_key=(i,)) and
splits into independent streams for ground truth, the oracle's defense,
and the attack, so any run replays byte-identically from its config.
MEXLAB_THREADS caps how many trials run concurrently (default 1);
results are collected in trial order either way.
"""

import copy
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from . import datasets as ds_mod
from .geometry import Halfspace, geometric_error, sample_unit_sphere
from .halfspace import (
    BisectionPlan,
    ExtractionReport,
    average_attack,
    equation_solve_regression,
    lowd_meek_extract,
    noisy_qs_extract,
    qs_extract_halfspace,
    qs_extract_stability,
)
from .nonlinear import eat_extract_svm, iwal_extract
from .oracle import (
    BudgetExceeded,
    ConstantFlip,
    LinearRegression,
    ModelRandomization,
    NoDefense,
    Oracle,
    QueryLedger,
)
from .svm import KernelSvmModel, svm_train
from .trees import dt_train_weighted, rf_train_weighted

SCHEMA_VERSION = 1

ATTACKS = (
    "qs",
    "qs_stability",
    "noisy_qs",
    "average",
    "lowd_meek",
    "equation_solve",
    "eat",
    "iwal",
)

_TOP_KEYS = {
    "schema",
    "attack",
    "d",
    "eps",
    "delta",
    "rho",
    "sigma_hat",
    "defense",
    "budget",
    "price_per_query",
    "trials",
    "seed",
    "attack_params",
    "dataset_path",
}

_DEFENSE_KEYS = {"kind", "rho", "sigma"}

_ATTACK_PARAM_KEYS = {
    "qs": {"depth_coarse", "depth_full", "pivot"},
    "noisy_qs": {"depth_coarse", "depth_full", "pivot"},
    "qs_stability": {"N", "tau", "max_depth", "depth_coarse"},
    "average": {"chunk"},
    "lowd_meek": {"probe_budget"},
    "equation_solve": set(),
    "eat": {
        "r_init",
        "k",
        "C",
        "gamma",
        "tol",
        "max_passes",
        "n_test",
        "victim_centers",
        "victim_gamma",
        "victim_C",
    },
    "iwal": {
        "learner",
        "o",
        "c0",
        "c1",
        "c2",
        "seed_size",
        "pool_size",
        "tree_depth",
        "max_depth",
        "min_leaf",
        "n_classes",
        "cadence",
        "sample_count",
        "n_test",
        "repeat_pool",
    },
}

_REQUIRED = {
    "qs": ("d", "eps"),
    "qs_stability": ("d",),
    "noisy_qs": ("d", "eps", "delta", "rho"),
    "average": ("d", "eps", "delta", "sigma_hat"),
    "lowd_meek": ("d", "eps"),
    "equation_solve": ("d",),
    "eat": ("d", "budget"),
    "iwal": ("d",),
}


@dataclass
class ExperimentConfig:
    """Validated experiment description (see from_dict for the schema)."""

    attack: str
    d: int
    eps: float = None
    delta: float = None
    rho: float = None
    sigma_hat: float = None
    defense: dict = None
    budget: int = None
    price_per_query: str = "0.0001"
    trials: int = 1
    seed: int = 0
    attack_params: dict = None
    dataset_path: str = None

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ValueError("config must be a JSON object")
        unknown = set(obj) - _TOP_KEYS
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        if obj.get("schema") != SCHEMA_VERSION:
            raise ValueError("config schema must be %d" % SCHEMA_VERSION)
        attack = obj.get("attack")
        if attack not in ATTACKS:
            raise ValueError("unknown attack %r" % (attack,))
        for key in _REQUIRED[attack]:
            if obj.get(key) is None:
                raise ValueError("attack %r requires %r" % (attack, key))
        defense = obj.get("defense") or {"kind": "none"}
        unknown = set(defense) - _DEFENSE_KEYS
        if unknown:
            raise ValueError("unknown defense keys: %s" % ", ".join(sorted(unknown)))
        if defense.get("kind") not in ("none", "constant_flip", "model_randomization"):
            raise ValueError("unknown defense kind %r" % (defense.get("kind"),))
        params = obj.get("attack_params") or {}
        unknown = set(params) - _ATTACK_PARAM_KEYS[attack]
        if unknown:
            raise ValueError(
                "unknown attack_params for %s: %s" % (attack, ", ".join(sorted(unknown)))
            )
        d = int(obj["d"])
        if d < 1:
            raise ValueError("d must be >= 1")
        trials = int(obj.get("trials", 1))
        if trials < 1:
            raise ValueError("trials must be >= 1")
        price = obj.get("price_per_query", "0.0001")
        cfg = cls(
            attack=attack,
            d=d,
            eps=_opt_float(obj.get("eps")),
            delta=_opt_float(obj.get("delta")),
            rho=_opt_float(obj.get("rho")),
            sigma_hat=_opt_float(obj.get("sigma_hat")),
            defense=dict(defense),
            budget=None if obj.get("budget") is None else int(obj["budget"]),
            price_per_query=str(price),
            trials=trials,
            seed=int(obj.get("seed", 0)),
            attack_params=dict(params),
            dataset_path=obj.get("dataset_path"),
        )
        cfg.build_defense(np.random.default_rng(0))  # validate parameters early
        return cfg

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "attack": self.attack,
            "d": self.d,
            "eps": self.eps,
            "delta": self.delta,
            "rho": self.rho,
            "sigma_hat": self.sigma_hat,
            "defense": self.defense,
            "budget": self.budget,
            "price_per_query": self.price_per_query,
            "trials": self.trials,
            "seed": self.seed,
            "attack_params": self.attack_params,
            "dataset_path": self.dataset_path,
        }

    def build_defense(self, rng):
        kind = self.defense.get("kind", "none")
        if kind == "none":
            return NoDefense()
        if kind == "constant_flip":
            if self.defense.get("rho") is None:
                raise ValueError("constant_flip defense needs rho")
            return ConstantFlip(float(self.defense["rho"]))
        if self.defense.get("sigma") is None:
            raise ValueError("model_randomization defense needs sigma")
        return ModelRandomization(float(self.defense["sigma"]))


def _opt_float(v):
    return None if v is None else float(v)


@dataclass
class RunRecord:
    config: dict
    trials: list
    aggregates: dict

    def to_json(self, include_timing=False):
        trials = []
        for t in self.trials:
            t = dict(t)
            if not include_timing:
                t["wall_time"] = 0.0
            trials.append(t)
        payload = {
            "config": self.config,
            "trials": trials,
            "aggregates": self.aggregates,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _trial_rngs(seed, i):
    children = np.random.SeedSequence(entropy=seed, spawn_key=(i,)).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def _uniform_box_points(d, n, rng):
    return rng.random((n, d)) * 2.0 - 1.0


def _rbf_victim(d, rng, n_centers, gamma):
    """Smooth RBF machine over [-1,1]^d: alternating-sign Gaussian centers,
    bias shifted so labels split roughly evenly."""
    centers = _uniform_box_points(d, n_centers, rng)
    coefs = np.where(np.arange(n_centers) % 2 == 0, 1.0, -1.0)
    raw = KernelSvmModel(centers, coefs, 0.0, gamma)
    probe = _uniform_box_points(d, 4096, rng)
    bias = -float(np.median(raw.presign(probe)))
    return KernelSvmModel(centers, coefs, bias, gamma)


def _run_trial(cfg, i):
    r_truth, r_oracle, r_attack = _trial_rngs(cfg.seed, i)
    ledger = QueryLedger(cfg.price_per_query, cfg.budget)
    attack = cfg.attack

    if attack in ("qs", "qs_stability", "noisy_qs", "average", "lowd_meek"):
        w_star = sample_unit_sphere(cfg.d, r_truth)
        oracle = Oracle(
            Halfspace(w_star), cfg.build_defense(r_oracle), ledger, rng=r_oracle
        )
        try:
            report = _run_halfspace_attack(cfg, oracle, r_attack)
        except BudgetExceeded:
            report = ExtractionReport(None, ledger.count, ledger.cost, "BudgetExceeded")
        if report.w_hat is not None and np.ndim(report.w_hat) == 1:
            report.err2 = geometric_error(w_star, report.w_hat)
        success = report.outcome == "Success" and (
            cfg.eps is None or (report.err2 is not None and report.err2 <= cfg.eps)
        )
        return report, success, w_star

    if attack == "equation_solve":
        a_star = r_truth.standard_normal(cfg.d + 1)
        oracle = Oracle(LinearRegression(a_star), ledger=ledger, rng=r_oracle, leaky=True)
        try:
            a_hat = equation_solve_regression(oracle, cfg.d)
            err = float(np.sum(np.abs(a_star - a_hat)))
            report = ExtractionReport(a_hat, ledger.count, ledger.cost, "Success", err2=err)
        except BudgetExceeded:
            report = ExtractionReport(None, ledger.count, ledger.cost, "BudgetExceeded")
        tol = cfg.eps if cfg.eps is not None else 1e-9
        success = report.outcome == "Success" and report.err2 <= tol
        return report, success, a_star

    if attack == "eat":
        return _run_eat_trial(cfg, ledger, r_truth, r_oracle, r_attack)
    return _run_iwal_trial(cfg, ledger, r_truth, r_oracle, r_attack)


def _run_halfspace_attack(cfg, oracle, rng):
    params = cfg.attack_params
    if cfg.attack == "qs":
        plan = _plan_from_params(cfg.d, cfg.eps, params)
        return qs_extract_halfspace(oracle, cfg.d, cfg.eps, plan=plan)
    if cfg.attack == "noisy_qs":
        plan = _plan_from_params(cfg.d, cfg.eps, params)
        return noisy_qs_extract(oracle, cfg.d, cfg.eps, cfg.delta, cfg.rho, plan=plan)
    if cfg.attack == "qs_stability":
        return qs_extract_stability(
            oracle,
            cfg.d,
            N=int(params.get("N", 10)),
            tau=float(params.get("tau", 1e-3)),
            max_depth=int(params.get("max_depth", 40)),
        )
    if cfg.attack == "average":
        return average_attack(
            oracle,
            cfg.d,
            cfg.sigma_hat,
            cfg.eps,
            cfg.delta,
            rng,
            chunk=int(params.get("chunk", 1 << 18)),
        )
    return lowd_meek_extract(
        oracle, cfg.d, cfg.eps, rng, probe_budget=int(params.get("probe_budget", 100))
    )


def _plan_from_params(d, eps, params):
    if not ({"depth_coarse", "depth_full", "pivot"} & set(params)):
        return None
    base = BisectionPlan.default(d, eps)
    return BisectionPlan(
        depth_coarse=int(params.get("depth_coarse", base.depth_coarse)),
        depth_full=int(params.get("depth_full", base.depth_full)),
        target_eps=eps,
        pivot=params.get("pivot"),
    )


def _run_eat_trial(cfg, ledger, r_truth, r_oracle, r_attack):
    params = cfg.attack_params
    d = cfg.d
    if cfg.dataset_path:
        data = ds_mod.load_csv(cfg.dataset_path)
        if data.d != d:
            raise ValueError("dataset has d=%d, config says %d" % (data.d, d))
        victim = svm_train(
            data.X,
            data.y.astype(np.float64),
            C=float(params.get("victim_C", 10.0)),
            gamma=float(params.get("victim_gamma", 0.15)),
        )
        box = data.domain_box
    else:
        victim = _rbf_victim(
            d,
            r_truth,
            int(params.get("victim_centers", 4)),
            float(params.get("victim_gamma", 0.15)),
        )
        box = np.tile(np.array([-1.0, 1.0]), (d, 1))
    oracle = Oracle(victim, cfg.build_defense(r_oracle), ledger, rng=r_oracle)
    n_test = int(params.get("n_test", 2000))
    Xe = _uniform_box_points(d, n_test, r_truth)
    ye = victim.predict(Xe)
    svm_params = {
        "C": float(params.get("C", 10.0)),
        "gamma": float(params.get("gamma", 0.15)),
        "tol": float(params.get("tol", 1e-3)),
        "max_passes": int(params.get("max_passes", 5)),
    }
    try:
        _, report = eat_extract_svm(
            oracle,
            box,
            r_init=params.get("r_init"),
            k=int(params.get("k", 100)),
            budget=int(cfg.budget),
            svm_params=svm_params,
            rng=r_attack,
            eval_set=(Xe, ye),
        )
    except BudgetExceeded:
        report = ExtractionReport(None, ledger.count, ledger.cost, "BudgetExceeded")
    if report.accuracy is not None:
        report.err2 = 1.0 - report.accuracy
    success = report.outcome == "Success" and (
        cfg.eps is None or (report.err2 is not None and report.err2 <= cfg.eps)
    )
    return report, success, victim


def _run_iwal_trial(cfg, ledger, r_truth, r_oracle, r_attack):
    params = cfg.attack_params
    d = cfg.d
    learner = params.get("learner", "tree")
    depth = int(params.get("tree_depth", 3))
    n_classes = int(params.get("n_classes", 2))
    if cfg.dataset_path:
        data = ds_mod.load_csv(cfg.dataset_path)
        if data.d != d:
            raise ValueError("dataset has d=%d, config says %d" % (data.d, d))
        pool = data.X
        if learner == "forest":
            victim = rf_train_weighted(
                data.X, data.y, o=int(params.get("o", 5)), max_depth=depth, rng=r_truth
            )
        else:
            victim = dt_train_weighted(data.X, data.y, max_depth=depth)
    else:
        pool_size = int(params.get("pool_size", 2000))
        fixture, tree = ds_mod.synth_tree_labeled(
            d, pool_size, depth, r_truth, n_classes=n_classes
        )
        pool = fixture.X
        if learner == "forest":
            victim = rf_train_weighted(
                fixture.X,
                fixture.y,
                o=int(params.get("o", 5)),
                max_depth=depth,
                rng=r_truth,
            )
        else:
            victim = tree
    oracle = Oracle(victim, cfg.build_defense(r_oracle), ledger, rng=r_oracle)
    n_test = int(params.get("n_test", 2000))
    Xe = r_truth.random((n_test, d))
    ye = victim.predict(Xe)
    learner_params = {
        "max_depth": int(params.get("max_depth", depth)),
        "min_leaf": int(params.get("min_leaf", 1)),
    }
    if learner == "forest":
        learner_params["o"] = int(params.get("o", 5))
    try:
        _, report = iwal_extract(
            oracle,
            pool,
            learner=learner,
            budget=cfg.budget,
            c0=float(params.get("c0", 8.0)),
            c1=float(params.get("c1", 1.0)),
            c2=float(params.get("c2", 1.0)),
            seed_size=int(params.get("seed_size", 20)),
            learner_params=learner_params,
            rng=r_attack,
            eval_set=(Xe, ye),
            repeat_pool=bool(params.get("repeat_pool", False)),
            cadence=int(params.get("cadence", 1)),
            sample_count=int(params.get("sample_count", 50)),
        )
    except BudgetExceeded:
        report = ExtractionReport(None, ledger.count, ledger.cost, "BudgetExceeded")
    if report.accuracy is not None:
        report.err2 = 1.0 - report.accuracy
    success = report.outcome == "Success" and (
        cfg.eps is None or (report.err2 is not None and report.err2 <= cfg.eps)
    )
    return report, success, victim


def _trial_payload(report, success):
    w_hat = report.w_hat
    if w_hat is not None and isinstance(w_hat, np.ndarray):
        w_hat = w_hat.tolist()
    else:
        w_hat = None
    return {
        "outcome": report.outcome,
        "success": bool(success),
        "queries": int(report.queries_used),
        "cost": str(report.cost),
        "err2": report.err2,
        "accuracy": report.accuracy,
        "wall_time": float(report.wall_time),
        "w_hat": w_hat,
    }


def thread_cap():
    """Worker cap from MEXLAB_THREADS (>= 1; unset or invalid means 1)."""
    raw = os.environ.get("MEXLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(cfg, keep_reports=False):
    """Run cfg.trials seeded trials and aggregate them into a RunRecord.

    With keep_reports=True also returns the raw per-trial reports, whose
    extras hold attack internals (query logs, plans, IWAL state).
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    workers = thread_cap()
    if workers == 1:
        results = [_run_trial(cfg, i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _run_trial(cfg, i), range(cfg.trials)))

    reports = [r for r, _, _ in results]
    successes = sum(1 for _, s, _ in results if s)
    trials = [_trial_payload(r, s) for r, s, _ in results]

    queries = np.array([r.queries_used for r in reports], dtype=np.float64)
    errs = [r.err2 for r in reports if r.err2 is not None]
    accs = [r.accuracy for r in reports if r.accuracy is not None]
    total_cost = sum((r.cost for r in reports), Decimal(0))
    aggregates = {
        "trials": cfg.trials,
        "successes": successes,
        "success_rate": successes / cfg.trials,
        "mean_queries": float(queries.mean()),
        "std_queries": float(queries.std()),
        "mean_err2": float(np.mean(errs)) if errs else None,
        "mean_accuracy": float(np.mean(accs)) if accs else None,
        "total_cost": str(total_cost),
        "mean_cost": str(total_cost / cfg.trials),
    }
    record = RunRecord(config=cfg.to_dict(), trials=trials, aggregates=aggregates)
    if keep_reports:
        return record, reports
    return record


SWEEP_COLUMNS = (
    "axis",
    "value",
    "mean_queries",
    "std_queries",
    "mean_err2",
    "success_rate",
    "mean_cost",
    "error",
)


def run_sweep(sweep):
    """Run the base config once per axis value; failures stay in their row.

    sweep = {"schema": 1, "axis": "eps" | "d" | ... | "defense.rho" |
    "defense.sigma", "values": [...], "base": {config without the axis}}.
    Returns a list of row dicts in SWEEP_COLUMNS order.
    """
    if not isinstance(sweep, dict):
        raise ValueError("sweep config must be a JSON object")
    unknown = set(sweep) - {"schema", "axis", "values", "base"}
    if unknown:
        raise ValueError("unknown sweep keys: %s" % ", ".join(sorted(unknown)))
    if sweep.get("schema") != SCHEMA_VERSION:
        raise ValueError("sweep schema must be %d" % SCHEMA_VERSION)
    axis = sweep.get("axis")
    values = sweep.get("values")
    base = sweep.get("base")
    if not isinstance(axis, str) or not axis:
        raise ValueError("sweep needs an axis name")
    if not isinstance(values, list) or not values:
        raise ValueError("sweep needs a nonempty values list")
    if not isinstance(base, dict):
        raise ValueError("sweep needs a base config object")

    rows = []
    for value in values:
        row = {c: "" for c in SWEEP_COLUMNS}
        row["axis"] = axis
        row["value"] = value
        try:
            obj = copy.deepcopy(base)
            obj.setdefault("schema", SCHEMA_VERSION)
            if axis.startswith("defense."):
                obj.setdefault("defense", {"kind": "none"})[axis.split(".", 1)[1]] = value
            else:
                obj[axis] = value
            record = run_experiment(ExperimentConfig.from_dict(obj))
            agg = record.aggregates
            row["mean_queries"] = agg["mean_queries"]
            row["std_queries"] = agg["std_queries"]
            row["mean_err2"] = agg["mean_err2"] if agg["mean_err2"] is not None else ""
            row["success_rate"] = agg["success_rate"]
            row["mean_cost"] = agg["mean_cost"]
        except Exception as exc:  # recorded in-row; the sweep continues
            row["error"] = "%s: %s" % (type(exc).__name__, exc)
        rows.append(row)
    return rows


def write_sweep_csv(rows, path):
    """Fixed column order, documented in the leading comment line."""
    with open(path, "w", newline="") as fh:
        fh.write("# columns: %s\n" % ",".join(SWEEP_COLUMNS))
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in SWEEP_COLUMNS) + "\n")
