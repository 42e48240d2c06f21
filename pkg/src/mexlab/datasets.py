"""Dataset loading, preprocessing, and synthetic fixtures.

CSV layout: one header row of column names, label in the last column,
numeric features. Binary {0, 1} labels are remapped to {-1, +1} on load;
other small integer class sets pass through unchanged.
"""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import sample_unit_sphere, sign_pm1
from .trees import DecisionTree, TreeNode


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    domain_box: np.ndarray  # (d, 2) observed [lo, hi] per feature

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def _observed_box(X):
    return np.column_stack([X.min(axis=0), X.max(axis=0)])


def load_csv(path):
    """Read a labeled dataset, failing with the offending line number.

    The header row is required; a first row that parses entirely as
    numbers is treated as a missing header.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("%s: empty file" % path)
        if len(header) < 2:
            raise ValueError("%s:1: need at least one feature and a label" % path)
        if all(_is_number(tok) for tok in header):
            raise ValueError("%s:1: missing header row" % path)
        width = len(header)
        rows = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ValueError(
                    "%s:%d: expected %d fields, got %d" % (path, lineno, width, len(row))
                )
            try:
                vals = [float(tok) for tok in row]
            except ValueError:
                raise ValueError("%s:%d: non-numeric field" % (path, lineno))
            label = vals[-1]
            if label != int(label):
                raise ValueError("%s:%d: label %r is not an integer" % (path, lineno, label))
            rows.append(vals[:-1])
            labels.append(int(label))
    if not rows:
        raise ValueError("%s: no data rows" % path)
    X = np.array(rows, dtype=np.float64)
    y = np.array(labels, dtype=np.int64)
    if set(np.unique(y)) <= {0, 1}:
        y = np.where(y == 1, 1, -1).astype(np.int64)
    return Dataset(X, y, feature_names=header[:-1], domain_box=_observed_box(X))


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def write_csv(ds, path):
    """Write a dataset back out; %.17g keeps load/write round trips exact."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + ["label"])
        for row, label in zip(ds.X, ds.y):
            writer.writerow(["%.17g" % v for v in row] + [str(int(label))])


def bin_and_onehot(ds, bins):
    """Equal-width bin each feature over its observed range, one-hot encode.

    A value exactly on an interior edge goes to the higher bin; the range
    maximum stays in the top bin. A constant feature collapses to a single
    always-on indicator (with a warning), so the output width is bins per
    varying feature plus one per constant feature.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    cols = []
    names = []
    for f in range(ds.d):
        lo, hi = ds.domain_box[f]
        v = ds.X[:, f]
        if hi == lo:
            warnings.warn(
                "feature %r is constant; emitting one always-on indicator"
                % ds.feature_names[f]
            )
            cols.append(np.ones((ds.n, 1)))
            names.append("%s=const" % ds.feature_names[f])
            continue
        width = (hi - lo) / bins
        idx = np.floor((v - lo) / width).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
        block = np.zeros((ds.n, bins))
        block[np.arange(ds.n), idx] = 1.0
        cols.append(block)
        names.extend("%s=bin%d" % (ds.feature_names[f], b) for b in range(bins))
    X = np.hstack(cols)
    return Dataset(X, ds.y.copy(), feature_names=names, domain_box=_observed_box(X))


def synth_halfspace(d, n, rng):
    """Uniform sphere points labeled by a random unit normal w*."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    w_star = sample_unit_sphere(d, rng)
    X = sample_unit_sphere(d, rng, size=n)
    y = sign_pm1(X @ w_star)
    names = ["x%d" % i for i in range(d)]
    return Dataset(X, y, feature_names=names, domain_box=_observed_box(X)), w_star


def _random_tree(d, depth, labels, rng):
    def grow(level):
        if level == depth:
            return TreeNode(label=int(labels[rng.integers(0, len(labels))]))
        return TreeNode(
            feature=int(rng.integers(0, d)),
            threshold=float(rng.uniform(0.25, 0.75)),
            left=grow(level + 1),
            right=grow(level + 1),
        )

    return DecisionTree(grow(0), d, labels)


def synth_tree_labeled(d, n, depth, rng, n_classes=2):
    """Uniform [0,1]^d points labeled by a random full tree of the given depth.

    Binary trees label with {-1, +1}; n_classes >= 3 uses {0, ..., k-1}.
    """
    if d < 1 or n < 1 or depth < 1:
        raise ValueError("need d >= 1, n >= 1, depth >= 1")
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    labels = (-1, 1) if n_classes == 2 else tuple(range(n_classes))
    tree = _random_tree(d, depth, labels, rng)
    X = rng.random((n, d))
    y = tree.predict(X)
    names = ["x%d" % i for i in range(d)]
    return Dataset(X, y, feature_names=names, domain_box=_observed_box(X)), tree


def train_test_split(ds, test_fraction, rng):
    """Shuffled split; errors out rather than returning an empty side."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    n_test = int(np.floor(ds.n * test_fraction))
    if n_test < 1 or ds.n - n_test < 1:
        raise ValueError("split would leave an empty side")
    perm = rng.permutation(ds.n)
    te, tr = perm[:n_test], perm[n_test:]
    box = ds.domain_box
    return (
        Dataset(ds.X[tr], ds.y[tr], list(ds.feature_names), box.copy()),
        Dataset(ds.X[te], ds.y[te], list(ds.feature_names), box.copy()),
    )


def test_accuracy(model, ds):
    """Fraction of dataset rows the model labels correctly."""
    if ds.n < 1:
        raise ValueError("empty dataset")
    return float(np.mean(np.asarray(model.predict(ds.X)) == ds.y))


def save_truth(path, truth):
    """Persist ground truth next to a generated fixture (JSON)."""
    if isinstance(truth, DecisionTree):
        payload = json.loads(truth.to_json())
    else:
        payload = {"kind": "halfspace", "w": np.asarray(truth).tolist()}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
