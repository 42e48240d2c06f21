import json
import os
import subprocess
import sys

import numpy as np
import pytest

import mexlab as mx
from mexlab.harness import ExperimentConfig, run_experiment, run_sweep, write_sweep_csv


def _qs_config(**over):
    base = {
        "schema": 1,
        "attack": "qs",
        "d": 6,
        "eps": 1e-3,
        "trials": 3,
        "seed": 5,
        "price_per_query": "0.0001",
    }
    base.update(over)
    return base


# --------------------------------------------------------------- config


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict(_qs_config())
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_unknown_top_level_key_rejected():
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict(_qs_config(epz=0.1))


def test_unknown_defense_key_rejected():
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict(
            _qs_config(defense={"kind": "constant_flip", "rho": 0.1, "rh": 2})
        )


def test_unknown_attack_param_rejected():
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict(_qs_config(attack_params={"not_a_knob": 1}))


def test_schema_version_enforced():
    with pytest.raises(ValueError, match="schema"):
        ExperimentConfig.from_dict(_qs_config(schema=2))
    cfg = _qs_config()
    del cfg["schema"]
    with pytest.raises(ValueError, match="schema"):
        ExperimentConfig.from_dict(cfg)


def test_missing_required_field_rejected():
    cfg = _qs_config()
    del cfg["eps"]
    with pytest.raises(ValueError, match="eps"):
        ExperimentConfig.from_dict(cfg)


def test_bad_defense_kind_rejected():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(_qs_config(defense={"kind": "tinfoil"}))


def test_invalid_defense_parameter_rejected_early():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(
            _qs_config(defense={"kind": "constant_flip", "rho": 0.6})
        )


# ------------------------------------------------------------ experiments


def test_run_experiment_replay_identical():
    cfg = ExperimentConfig.from_dict(_qs_config())
    a = run_experiment(cfg).to_json()
    b = run_experiment(cfg).to_json()
    assert a == b


def test_run_experiment_seed_changes_trials():
    a = run_experiment(ExperimentConfig.from_dict(_qs_config(seed=1)))
    b = run_experiment(ExperimentConfig.from_dict(_qs_config(seed=2)))
    assert a.to_json() != b.to_json()


def test_run_experiment_aggregates():
    rec = run_experiment(ExperimentConfig.from_dict(_qs_config()))
    assert len(rec.trials) == 3
    agg = rec.aggregates
    assert agg["trials"] == 3
    assert agg["success_rate"] == 1.0
    # total cost is the exact decimal sum of per-trial costs
    from decimal import Decimal

    total = sum(Decimal(t["cost"]) for t in rec.trials)
    assert Decimal(agg["total_cost"]) == total


def test_run_experiment_trial_outcomes_have_schema_fields():
    rec = run_experiment(ExperimentConfig.from_dict(_qs_config(trials=1)))
    t = rec.trials[0]
    for key in ("outcome", "queries", "cost", "err2", "accuracy", "wall_time"):
        assert key in t


def test_budget_one_reports_budget_exceeded():
    rec = run_experiment(
        ExperimentConfig.from_dict(_qs_config(trials=2, budget=1))
    )
    assert all(t["outcome"] == "BudgetExceeded" for t in rec.trials)
    assert rec.aggregates["success_rate"] == 0.0
    assert all(t["queries"] <= 1 for t in rec.trials)


def test_queries_never_exceed_budget():
    rec = run_experiment(
        ExperimentConfig.from_dict(_qs_config(trials=3, budget=50))
    )
    assert all(t["queries"] <= 50 for t in rec.trials)


def test_defended_experiment_runs():
    cfg = ExperimentConfig.from_dict(
        {
            "schema": 1,
            "attack": "noisy_qs",
            "d": 4,
            "eps": 1e-2,
            "delta": 0.1,
            "rho": 0.2,
            "defense": {"kind": "constant_flip", "rho": 0.2},
            "trials": 2,
            "seed": 3,
        }
    )
    rec = run_experiment(cfg)
    assert rec.aggregates["success_rate"] == 1.0


def test_equation_solve_through_harness():
    cfg = ExperimentConfig.from_dict(
        {"schema": 1, "attack": "equation_solve", "d": 5, "trials": 4, "seed": 9}
    )
    rec = run_experiment(cfg)
    assert rec.aggregates["success_rate"] == 1.0
    assert all(t["queries"] == 6 for t in rec.trials)


def test_thread_cap_does_not_change_results():
    cfg_dict = _qs_config(trials=4)
    script = (
        "import json\n"
        "from mexlab.harness import ExperimentConfig, run_experiment\n"
        "cfg = ExperimentConfig.from_dict(json.loads(%r))\n"
        "print(run_experiment(cfg).to_json())\n" % json.dumps(cfg_dict)
    )
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, MEXLAB_THREADS=threads)
        res = subprocess.run(
            [sys.executable, "-c", script], capture_output=True, text=True, env=env
        )
        assert res.returncode == 0, res.stderr
        outs.append(res.stdout)
    assert outs[0] == outs[1]


# ----------------------------------------------------------------- sweeps


def test_single_value_sweep_matches_experiment():
    base = _qs_config()
    base.pop("schema")
    sweep = {"schema": 1, "axis": "eps", "values": [1e-3], "base": base}
    rows = run_sweep(sweep)
    rec = run_experiment(ExperimentConfig.from_dict(_qs_config()))
    assert len(rows) == 1
    assert rows[0]["error"] == ""
    assert float(rows[0]["mean_queries"]) == rec.aggregates["mean_queries"]
    assert rows[0]["mean_cost"] == rec.aggregates["mean_cost"]


def test_sweep_axis_over_dimension():
    base = _qs_config(trials=2)
    base.pop("schema")
    base.pop("d")
    sweep = {"schema": 1, "axis": "d", "values": [2, 4, 8], "base": base}
    rows = run_sweep(sweep)
    qs = [float(r["mean_queries"]) for r in rows]
    assert qs == sorted(qs)


def test_sweep_defense_axis():
    base = {
        "attack": "noisy_qs",
        "d": 3,
        "eps": 1e-2,
        "delta": 0.1,
        "rho": 0.1,
        "trials": 1,
        "seed": 2,
    }
    sweep = {
        "schema": 1,
        "axis": "defense.rho",
        "values": [0.0, 0.1],
        "base": dict(base, defense={"kind": "constant_flip", "rho": 0.0}),
    }
    rows = run_sweep(sweep)
    assert all(r["error"] == "" for r in rows)


def test_sweep_bad_value_stays_in_row():
    base = _qs_config(trials=1)
    base.pop("schema")
    sweep = {"schema": 1, "axis": "eps", "values": [1e-2, -1.0, 1e-3], "base": base}
    rows = run_sweep(sweep)
    assert rows[0]["error"] == "" and rows[2]["error"] == ""
    assert rows[1]["error"] != ""
    assert rows[1]["mean_queries"] == ""


def test_sweep_rejects_unknown_keys():
    with pytest.raises(ValueError):
        run_sweep({"schema": 1, "axis": "eps", "values": [0.1], "base": {}, "x": 1})


def test_write_sweep_csv_layout(tmp_path):
    base = _qs_config(trials=1)
    base.pop("schema")
    sweep = {"schema": 1, "axis": "eps", "values": [1e-2, 1e-3], "base": base}
    rows = run_sweep(sweep)
    out = tmp_path / "sweep.csv"
    write_sweep_csv(rows, str(out))
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# columns:")
    assert lines[1] == "axis,value,mean_queries,std_queries,mean_err2,success_rate,mean_cost,error"
    assert len(lines) == 2 + len(rows)


# ------------------------------------------------------ nonlinear attacks


def test_eat_through_harness_smoke():
    cfg = ExperimentConfig.from_dict(
        {
            "schema": 1,
            "attack": "eat",
            "d": 4,
            "budget": 80,
            "trials": 1,
            "seed": 21,
            "attack_params": {"r_init": 30, "k": 20, "n_test": 500},
        }
    )
    rec = run_experiment(cfg)
    t = rec.trials[0]
    assert t["outcome"] == "Success"
    assert t["queries"] == 80
    assert t["accuracy"] > 0.6


def test_iwal_through_harness_smoke():
    cfg = ExperimentConfig.from_dict(
        {
            "schema": 1,
            "attack": "iwal",
            "d": 4,
            "trials": 1,
            "seed": 22,
            "attack_params": {"pool_size": 400, "tree_depth": 3, "n_test": 500},
        }
    )
    rec = run_experiment(cfg)
    t = rec.trials[0]
    assert t["outcome"] == "Success"
    assert t["accuracy"] > 0.7
    assert t["queries"] <= 400


def test_wall_time_zeroed_without_timing_flag():
    rec = run_experiment(ExperimentConfig.from_dict(_qs_config(trials=1)))
    payload = json.loads(rec.to_json())
    assert payload["trials"][0]["wall_time"] == 0.0
    timed = json.loads(rec.to_json(include_timing=True))
    assert timed["trials"][0]["wall_time"] >= 0.0
