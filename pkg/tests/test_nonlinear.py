import math

import numpy as np
import pytest

import mexlab as mx


# ------------------------------------------------------------ iwal scalars


def test_iwal_threshold_example():
    expected = math.sqrt(8 * math.log(2)) + 8 * math.log(2)
    assert mx.iwal_threshold(2, 8) == pytest.approx(expected, abs=1e-12)


def test_iwal_threshold_zero_constant():
    assert mx.iwal_threshold(17, 0) == 0.0


def test_iwal_threshold_monotone_decreasing():
    vals = [mx.iwal_threshold(n, 8) for n in range(3, 2000)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.25


def test_iwal_solve_s_example():
    mu = math.sqrt(8 * math.log(2)) + 8 * math.log(2)
    assert mx.iwal_solve_s(10.0, 2, 8) == pytest.approx((mu / 10.0) ** 2, abs=1e-9)


def test_iwal_solve_s_boundary_is_one():
    mu = mx.iwal_threshold(2, 8)
    assert mx.iwal_solve_s(mu, 2, 8) == 1.0
    assert mx.iwal_solve_s(mu / 2, 2, 8) == 1.0


def test_iwal_solve_s_vanishes_for_large_gap():
    s = mx.iwal_solve_s(1e6, 2, 8)
    assert 0.0 < s < 1e-9


def test_iwal_solve_s_monotone_in_gap():
    grid = np.linspace(mx.iwal_threshold(5, 8), 50.0, 40)
    vals = [mx.iwal_solve_s(g, 5, 8) for g in grid]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


# -------------------------------------------------- importance weighting


def _fit_small_tree(seed=0):
    ds, _ = mx.synth_tree_labeled(3, 120, 2, np.random.default_rng(seed))
    return ds, mx.dt_train_weighted(ds.X, ds.y, max_depth=3)


def test_iw_error_perfect_hypothesis():
    ds, h = _fit_small_tree()
    S = [(x, int(h.predict(x[None, :])[0]), 0.7) for x in ds.X[:5]]
    assert mx.importance_weighted_error(h, S, len(S)) == 0.0


def test_iw_error_single_wrong_full_weight():
    ds, h = _fit_small_tree(1)
    x = ds.X[0]
    wrong = -int(h.predict(x[None, :])[0])
    assert mx.importance_weighted_error(h, [(x, wrong, 1.0)], 1) == 1.0


def test_iw_error_hand_example():
    # (1/n) * sum (1/p) [h(x) != y] with one miss at p=0.5 and n=4
    ds, h = _fit_small_tree(2)
    x1, x2 = ds.X[0], ds.X[1]
    y1 = -int(h.predict(x1[None, :])[0])
    y2 = int(h.predict(x2[None, :])[0])
    S = [(x1, y1, 0.5), (x2, y2, 1.0)]
    assert mx.importance_weighted_error(h, S, 4) == pytest.approx(0.5)


# ------------------------------------------------------- alternatives


def test_tree_alternative_binary_flips_leaf():
    ds, h = _fit_small_tree(3)
    x = ds.X[0]
    alt = mx.tree_alternative(h, x, [], 1)
    assert alt.predict(x[None, :])[0] == -h.predict(x[None, :])[0]
    # everything outside the flipped leaf is untouched
    leaf_id = h.leaf_for(x).node_id
    mask = np.array([h.leaf_for(row).node_id != leaf_id for row in ds.X])
    np.testing.assert_array_equal(h.predict(ds.X[mask]), alt.predict(ds.X[mask]))


def test_tree_alternative_empty_sample_lowest_label():
    ds, truth = mx.synth_tree_labeled(4, 200, 3, np.random.default_rng(4), n_classes=3)
    h = mx.dt_train_weighted(ds.X, ds.y, max_depth=4)
    x = ds.X[0]
    alt = mx.tree_alternative(h, x, [], 5)
    current = h.predict(x[None, :])[0]
    candidates = [l for l in h.labels if l != current]
    assert alt.predict(x[None, :])[0] == min(candidates)


def test_tree_alternative_three_labels_min_error():
    ds, truth = mx.synth_tree_labeled(4, 300, 3, np.random.default_rng(5), n_classes=3)
    h = mx.dt_train_weighted(ds.X, ds.y, max_depth=4)
    x = ds.X[0]
    current = int(h.predict(x[None, :])[0])
    others = [l for l in h.labels if l != current]
    assert len(others) == 2
    # a labeled sample sitting in the same leaf steers the choice
    target = max(others)
    S = [(x, target, 1.0)]
    alt = mx.tree_alternative(h, x, S, 1)
    assert alt.predict(x[None, :])[0] == target


def test_forest_alternative_o1_single_flip():
    ds, _ = mx.synth_tree_labeled(3, 100, 2, np.random.default_rng(6))
    h = mx.dt_train_weighted(ds.X, ds.y, max_depth=3)
    forest = mx.RandomForest([h])
    x = ds.X[0]
    alt = mx.forest_alternative(forest, x, [], 1, rng=np.random.default_rng(7))
    assert alt.predict(x[None, :])[0] == -forest.predict(x[None, :])[0]


def test_forest_alternative_unanimous_flips_majority():
    # three identical trees vote 3-0; flipping j=3 of them flips the vote
    ds, _ = mx.synth_tree_labeled(3, 100, 2, np.random.default_rng(8))
    h = mx.dt_train_weighted(ds.X, ds.y, max_depth=3)
    forest = mx.RandomForest([h, h, h])
    x = ds.X[0]
    alt = mx.forest_alternative(forest, x, [], 1, rng=np.random.default_rng(9))
    assert alt.predict(x[None, :])[0] == -forest.predict(x[None, :])[0]


def test_forest_alternative_majority_three_of_five():
    # with a 3-2 vote only one flip is needed; the result dissents
    ds, _ = mx.synth_tree_labeled(3, 150, 2, np.random.default_rng(10))
    pos = mx.dt_train_weighted(ds.X, np.ones(len(ds.X), dtype=np.int64))
    neg = mx.dt_train_weighted(ds.X, -np.ones(len(ds.X), dtype=np.int64))
    forest = mx.RandomForest([pos, pos, pos, neg, neg])
    x = ds.X[0]
    assert forest.predict(x[None, :])[0] == 1
    alt = mx.forest_alternative(forest, x, [], 1, rng=np.random.default_rng(11))
    assert alt.predict(x[None, :])[0] == -1


# ----------------------------------------------------------------- eat


def _svm_victim(d, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (120, d))
    y = mx.sign_pm1(X[:, 0] - 0.5 * X[:, 1] + 0.25 * X[:, 2 % d])
    return mx.svm_train(X, y, C=10.0, gamma=0.5)


def _clean_oracle(model, seed=0, budget=None):
    return mx.Oracle(
        model, mx.NoDefense(), mx.QueryLedger("0.0001", budget), rng=np.random.default_rng(seed)
    )


def test_eat_self_extraction():
    victim = _svm_victim(3, 12)
    o = _clean_oracle(victim)
    box = np.array([[-1.0, 1.0]] * 3)
    model, report = mx.eat_extract_svm(
        o, box, budget=200, svm_params={"C": 10.0, "gamma": 0.5}, rng=np.random.default_rng(13)
    )
    probe = np.random.default_rng(14).uniform(-1, 1, (1000, 3))
    agreement = np.mean(model.predict(probe) == victim.predict(probe))
    assert agreement >= 0.95
    assert report.queries_used == 200
    assert report.queries_used == o.ledger.count


def test_eat_trace_records_candidate_scores():
    victim = _svm_victim(3, 15)
    o = _clean_oracle(victim, seed=16)
    box = np.array([[-1.0, 1.0]] * 3)
    trace = []
    mx.eat_extract_svm(
        o, box, r_init=20, k=7, budget=40,
        svm_params={"C": 10.0, "gamma": 0.5},
        rng=np.random.default_rng(17), trace=trace,
    )
    assert len(trace) == 20
    for entry in trace:
        assert len(entry["scores"]) == 7
        # picked candidate minimizes the pre-sign magnitude
        assert entry["pick"] == int(np.argmin(entry["scores"]))


def test_eat_beats_uniform_baseline():
    wins = 0
    d, budget = 3, 120
    box = np.array([[-1.0, 1.0]] * d)
    params = {"C": 10.0, "gamma": 0.5}
    for seed in range(10):
        victim = _svm_victim(d, 300 + seed)
        probe = np.random.default_rng(400 + seed).uniform(-1, 1, (800, d))
        truth = victim.predict(probe)

        model, _ = mx.eat_extract_svm(
            _clean_oracle(victim), box, budget=budget, svm_params=params,
            rng=np.random.default_rng(500 + seed),
        )
        eat_acc = np.mean(model.predict(probe) == truth)

        rng = np.random.default_rng(600 + seed)
        Xb = rng.uniform(-1, 1, (budget, d))
        yb = _clean_oracle(victim).query_batch(Xb)
        base = mx.svm_train(Xb, yb, **params)
        base_acc = np.mean(base.predict(probe) == truth)
        wins += eat_acc >= base_acc
    assert wins >= 8


def test_eat_respects_budget_exactly():
    victim = _svm_victim(3, 18)
    o = _clean_oracle(victim, seed=19, budget=150)
    box = np.array([[-1.0, 1.0]] * 3)
    model, report = mx.eat_extract_svm(
        o, box, budget=150, svm_params={"C": 10.0, "gamma": 0.5},
        rng=np.random.default_rng(20),
    )
    assert report.queries_used == 150


# ---------------------------------------------------------------- iwal


def test_iwal_self_extraction_skips_queries():
    # when the oracle is the seed-trained tree itself, the disagreement
    # gap collapses and some coin flips land on skip
    ds, truth = mx.synth_tree_labeled(4, 800, 3, np.random.default_rng(21))
    seed_X = ds.X[:20]
    victim = mx.dt_train_weighted(
        seed_X, truth.predict(seed_X), max_depth=3
    )
    o = _clean_oracle(victim, seed=22)
    model, report = mx.iwal_extract(
        o, ds.X, learner="tree", seed_size=20,
        learner_params={"max_depth": 3}, rng=np.random.default_rng(23),
    )
    assert report.extras["queried_fraction_post_seed"] < 1.0


def test_iwal_extraction_agreement():
    ds, truth = mx.synth_tree_labeled(4, 1000, 3, np.random.default_rng(24))
    o = _clean_oracle(truth, seed=25)
    model, report = mx.iwal_extract(
        o, ds.X, learner="tree", seed_size=20,
        learner_params={"max_depth": 3}, rng=np.random.default_rng(26),
    )
    probe = np.random.default_rng(27).random((1000, 4))
    agreement = np.mean(model.predict(probe) == truth.predict(probe))
    assert agreement >= 0.9
    assert report.queries_used == o.ledger.count
    assert report.queries_used <= len(ds.X)


def test_iwal_forest_learner_runs():
    ds, truth = mx.synth_tree_labeled(3, 400, 2, np.random.default_rng(28))
    o = _clean_oracle(truth, seed=29)
    model, report = mx.iwal_extract(
        o, ds.X, learner="forest", seed_size=20,
        learner_params={"o": 3, "max_depth": 3}, rng=np.random.default_rng(30),
    )
    assert isinstance(model, mx.RandomForest)
    assert report.outcome == "Success"


def test_iwal_budget_stops_early():
    ds, truth = mx.synth_tree_labeled(3, 600, 2, np.random.default_rng(31))
    o = _clean_oracle(truth, seed=32)
    model, report = mx.iwal_extract(
        o, ds.X, learner="tree", budget=50, seed_size=20,
        learner_params={"max_depth": 3}, rng=np.random.default_rng(33),
    )
    assert report.queries_used <= 50
