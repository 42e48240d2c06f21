"""Command line front end.

Subcommands:
    extract          run an experiment config, write a run record (JSON)
    sweep            run a sweep config, write per-value rows (CSV)
    rho              empirical flip rate of model randomization at given points
    stats hotelling  two-sample Hotelling T^2 on two numeric CSVs
    gen              synthesize labeled CSV fixtures (+ optional truth JSON)

Exit codes: 0 on success, 1 when any trial ends in Fail or BudgetExceeded
(or a sweep row records an error), 2 on bad usage or a bad config.
"""

import argparse
import json
import sys

import numpy as np

from . import datasets as ds_mod
from .defense_analysis import estimate_rho, hotelling_t2
from .harness import ExperimentConfig, run_experiment, run_sweep, write_sweep_csv


class SystemExit2(Exception):
    """Usage or config error; mapped to exit code 2 in main()."""


def _load_numeric_csv(path):
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise SystemExit2("could not read %s: %s" % (path, exc))


def _write_or_print(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_extract(args):
    try:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise SystemExit2(str(exc))
    record, reports = run_experiment(cfg, keep_reports=True)
    _write_or_print(record.to_json(include_timing=args.timings), args.out)
    if args.log_queries:
        _write_query_log(reports[0], cfg.d, args.log_queries)
    bad = [t for t in record.trials if t["outcome"] != "Success"]
    return 1 if bad else 0


def _write_query_log(report, d, path):
    """One row per labeled point of trial 0, tagged with its attack phase."""
    header = "phase," + ",".join("x%d" % i for i in range(d))
    rows = []
    for phase in ("probe", "coarse", "refine"):
        for x in report.extras.get("queries_%s" % phase, ()):
            rows.append(phase + "," + ",".join("%.17g" % v for v in np.asarray(x)))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _cmd_sweep(args):
    try:
        with open(args.config) as fh:
            sweep = json.load(fh)
        rows = run_sweep(sweep)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise SystemExit2(str(exc))
    write_sweep_csv(rows, args.out)
    return 1 if any(row["error"] for row in rows) else 0


def _cmd_rho(args):
    X = _load_numeric_csv(args.queries)
    w_star = _load_numeric_csv(args.w_star).ravel()
    if X.shape[1] != w_star.size:
        raise SystemExit2(
            "queries have %d columns but w-star has %d" % (X.shape[1], w_star.size)
        )
    rng = np.random.default_rng(args.seed)
    per_point = [
        estimate_rho(w_star, x, args.sigma, args.n, rng).rho_hat for x in X
    ]
    payload = {
        "sigma": args.sigma,
        "n": args.n,
        "per_point": per_point,
        "mean": float(np.mean(per_point)),
    }
    _write_or_print(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_stats_hotelling(args):
    A = _load_numeric_csv(args.a)
    B = _load_numeric_csv(args.b)
    try:
        result = hotelling_t2(A, B)
    except ValueError as exc:
        raise SystemExit2(str(exc))
    payload = {
        "t2": result.statistic,
        "f": result.f_stat,
        "df": list(result.df),
        "p_value": result.p_value,
    }
    _write_or_print(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    try:
        if args.kind == "halfspace":
            ds, truth = ds_mod.synth_halfspace(args.d, args.n, rng)
        else:
            n_classes = 3 if args.kind == "tree3" else 2
            ds, truth = ds_mod.synth_tree_labeled(
                args.d, args.n, args.depth, rng, n_classes=n_classes
            )
        ds_mod.write_csv(ds, args.out)
        if args.truth:
            ds_mod.save_truth(args.truth, truth)
    except (OSError, ValueError) as exc:
        raise SystemExit2(str(exc))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mexlab", description="model extraction attack and defense lab"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run an experiment config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", help="write the run record here instead of stdout")
    p.add_argument("--log-queries", help="CSV of trial-0 labeled points by phase")
    p.add_argument(
        "--timings", action="store_true", help="keep wall_time in the record"
    )
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("sweep", help="run a sweep config")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("rho", help="flip rate of model randomization")
    p.add_argument("--queries", required=True, help="numeric CSV, one point per row")
    p.add_argument("--w-star", required=True, help="numeric CSV holding the normal")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="draws per point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_rho)

    p = sub.add_parser("stats", help="statistical tests")
    stats_sub = p.add_subparsers(dest="stat", required=True)
    ph = stats_sub.add_parser("hotelling", help="two-sample Hotelling T^2")
    ph.add_argument("--a", required=True, help="numeric CSV, sample A rows")
    ph.add_argument("--b", required=True, help="numeric CSV, sample B rows")
    ph.add_argument("--out", help="write JSON here instead of stdout")
    ph.set_defaults(func=_cmd_stats_hotelling)

    p = sub.add_parser("gen", help="synthesize labeled CSV fixtures")
    p.add_argument(
        "--kind", required=True, choices=("halfspace", "tree", "tree3")
    )
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, default=3, help="tree depth (tree kinds)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--truth", help="also write ground truth JSON here")
    p.set_defaults(func=_cmd_gen)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
