import json

import numpy as np
import pytest

import mexlab as mx


def test_load_two_row_file(tmp_path):
    p = tmp_path / "tiny.csv"
    p.write_text("a,b,y\n0,1,0\n1,0,1\n")
    ds = mx.load_csv(str(p))
    assert ds.n == 2 and ds.d == 2
    np.testing.assert_array_equal(ds.y, [-1, 1])
    assert ds.feature_names == ["a", "b"]


def test_load_three_class_labels_preserved(tmp_path):
    p = tmp_path / "multi.csv"
    p.write_text("a,y\n0.1,0\n0.2,1\n0.3,2\n0.4,1\n")
    ds = mx.load_csv(str(p))
    np.testing.assert_array_equal(ds.y, [0, 1, 2, 1])


def test_load_missing_header_rejected(tmp_path):
    p = tmp_path / "raw.csv"
    p.write_text("0.5,0.1,0\n0.2,0.9,1\n")
    with pytest.raises(ValueError, match="missing header"):
        mx.load_csv(str(p))


def test_load_parse_error_carries_line_number(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,y\n0,1,0\n1,oops,1\n")
    with pytest.raises(ValueError, match=r":3:"):
        mx.load_csv(str(p))


def test_load_non_integer_label_rejected(tmp_path):
    p = tmp_path / "flabel.csv"
    p.write_text("a,y\n0.5,0.25\n")
    with pytest.raises(ValueError, match=r":2:"):
        mx.load_csv(str(p))


def test_load_empty_file_rejected(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ValueError, match="empty"):
        mx.load_csv(str(p))


def test_round_trip_bit_exact(tmp_path):
    ds, _ = mx.synth_halfspace(5, 60, np.random.default_rng(0))
    p = tmp_path / "round.csv"
    mx.write_csv(ds, str(p))
    back = mx.load_csv(str(p))
    np.testing.assert_array_equal(ds.X, back.X)
    np.testing.assert_array_equal(ds.y, back.y)
    assert back.feature_names == ds.feature_names
    # a second bounce is byte-identical on disk
    p2 = tmp_path / "round2.csv"
    mx.write_csv(back, str(p2))
    assert p.read_bytes() == p2.read_bytes()


def test_bin_and_onehot_example():
    ds = mx.Dataset(
        np.array([[0.1], [0.9]]),
        np.array([-1, 1]),
        ["f0"],
        np.array([[0.0, 1.0]]),
    )
    out = mx.bin_and_onehot(ds, 2)
    np.testing.assert_array_equal(out.X, [[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(out.y, ds.y)


def test_bin_and_onehot_shape():
    ds, _ = mx.synth_halfspace(3, 40, np.random.default_rng(1))
    out = mx.bin_and_onehot(ds, 4)
    assert out.X.shape == (40, 12)
    # each row is one-hot per original feature
    np.testing.assert_array_equal(out.X.reshape(40, 3, 4).sum(axis=2), 1.0)


def test_synth_halfspace_labels_match_truth():
    ds, w_star = mx.synth_halfspace(6, 200, np.random.default_rng(2))
    assert np.linalg.norm(w_star) == pytest.approx(1.0)
    np.testing.assert_array_equal(ds.y, mx.Halfspace(w_star).predict(ds.X))


def test_synth_tree_labels_match_truth():
    ds, tree = mx.synth_tree_labeled(4, 300, 3, np.random.default_rng(3))
    np.testing.assert_array_equal(ds.y, tree.predict(ds.X))
    assert ds.X.min() >= 0.0 and ds.X.max() <= 1.0
    assert tree.depth() <= 3


def test_synth_tree_multiclass():
    ds, tree = mx.synth_tree_labeled(4, 300, 3, np.random.default_rng(4), n_classes=3)
    assert set(np.unique(ds.y)) <= {0, 1, 2}
    np.testing.assert_array_equal(ds.y, tree.predict(ds.X))


def test_train_test_split_partitions():
    ds, _ = mx.synth_halfspace(3, 100, np.random.default_rng(5))
    train, test = mx.train_test_split(ds, 0.25, np.random.default_rng(6))
    assert train.n == 75 and test.n == 25
    combined = np.vstack([train.X, test.X])
    assert np.unique(combined, axis=0).shape[0] == np.unique(ds.X, axis=0).shape[0]


def test_train_test_split_deterministic():
    ds, _ = mx.synth_halfspace(3, 50, np.random.default_rng(7))
    a1, b1 = mx.train_test_split(ds, 0.2, np.random.default_rng(8))
    a2, b2 = mx.train_test_split(ds, 0.2, np.random.default_rng(8))
    np.testing.assert_array_equal(a1.X, a2.X)
    np.testing.assert_array_equal(b1.y, b2.y)


def test_test_accuracy_trivial():
    ds, w_star = mx.synth_halfspace(3, 50, np.random.default_rng(9))
    assert mx.test_accuracy(mx.Halfspace(w_star), ds) == 1.0


def test_save_truth_halfspace(tmp_path):
    w = mx.sample_unit_sphere(4, np.random.default_rng(10))
    p = tmp_path / "truth.json"
    mx.save_truth(str(p), w)
    data = json.loads(p.read_text())
    np.testing.assert_allclose(data["w"], w)


def test_save_truth_tree(tmp_path):
    _, tree = mx.synth_tree_labeled(3, 50, 2, np.random.default_rng(11))
    p = tmp_path / "truth.json"
    mx.save_truth(str(p), tree)
    clone = mx.DecisionTree.from_json(p.read_text())
    probe = np.random.default_rng(12).random((50, 3))
    np.testing.assert_array_equal(tree.predict(probe), clone.predict(probe))
