"""Weighted decision trees and bootstrap forests.

Training is greedy CART on weighted Gini impurity, deterministic for a
fixed input order: ties between splits keep the earliest feature and the
lowest threshold. Trees support leaf surgery (clone with one leaf
relabeled), which the extraction-side hypothesis alternatives rely on.
"""

import json

import numpy as np


class TreeNode:
    """Internal node (feature, threshold, children) or leaf (label)."""

    __slots__ = ("feature", "threshold", "left", "right", "label", "node_id")

    def __init__(self, feature=None, threshold=None, left=None, right=None, label=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.label = label
        self.node_id = None

    @property
    def is_leaf(self):
        return self.feature is None


def _assign_ids(root):
    """Preorder ids so leaves can be addressed stably across clones."""
    stack = [root]
    i = 0
    while stack:
        node = stack.pop()
        node.node_id = i
        i += 1
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def _copy_nodes(node):
    if node.is_leaf:
        return TreeNode(label=node.label)
    return TreeNode(
        feature=node.feature,
        threshold=node.threshold,
        left=_copy_nodes(node.left),
        right=_copy_nodes(node.right),
    )


class DecisionTree:
    """Axis-aligned tree classifier; x goes left when x[feature] <= threshold."""

    def __init__(self, root, n_features, labels):
        self.root = root
        self.n_features = int(n_features)
        self.labels = tuple(sorted(int(l) for l in labels))
        _assign_ids(self.root)

    @property
    def dim(self):
        return self.n_features

    def depth(self):
        def go(node):
            if node.is_leaf:
                return 0
            return 1 + max(go(node.left), go(node.right))

        return go(self.root)

    def leaf_for(self, x):
        x = np.asarray(x, dtype=np.float64)
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return int(self.leaf_for(x).label)
        out = np.empty(x.shape[0], dtype=np.int64)
        # route index masks down the tree instead of looping over rows
        stack = [(self.root, np.arange(x.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if node.is_leaf:
                out[idx] = node.label
                continue
            goes_left = x[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
        return out

    def clone_with_leaf(self, leaf_id, label):
        """Copy of the tree with the given leaf relabeled."""
        new_root = _copy_nodes(self.root)
        clone = DecisionTree(new_root, self.n_features, set(self.labels) | {int(label)})
        target = None
        stack = [clone.root]
        while stack:
            node = stack.pop()
            if node.node_id == leaf_id:
                target = node
                break
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)
        if target is None or not target.is_leaf:
            raise ValueError("leaf id %r does not address a leaf" % (leaf_id,))
        target.label = int(label)
        return clone

    def to_json(self):
        def encode(node):
            if node.is_leaf:
                return {"label": int(node.label)}
            return {
                "feature": int(node.feature),
                "threshold": float(node.threshold),
                "left": encode(node.left),
                "right": encode(node.right),
            }

        return json.dumps(
            {
                "kind": "tree",
                "n_features": self.n_features,
                "labels": list(self.labels),
                "root": encode(self.root),
            }
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("kind") != "tree":
            raise ValueError("not a serialized tree")

        def decode(spec):
            if "label" in spec:
                return TreeNode(label=int(spec["label"]))
            return TreeNode(
                feature=int(spec["feature"]),
                threshold=float(spec["threshold"]),
                left=decode(spec["left"]),
                right=decode(spec["right"]),
            )

        return cls(decode(obj["root"]), obj["n_features"], obj["labels"])


def _weighted_majority(y, w, classes):
    """Largest total weight wins; exact ties go to the lower label."""
    sums = np.array([w[y == c].sum() for c in classes])
    return int(classes[int(np.argmax(sums))])  # argmax keeps the first max


def _gini_from_counts(counts):
    total = counts.sum()
    if total <= 0.0:
        return 0.0
    frac = counts / total
    return 1.0 - float(np.sum(frac * frac))


def _best_split(X, y, w, classes, min_leaf):
    """Minimal weighted-Gini split, or None if nothing valid improves.

    Effective ties (within 1e-12) keep the lowest threshold inside a
    feature and the earliest feature across features.
    """
    n, d = X.shape
    k = len(classes)
    class_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([class_index[v] for v in y])
    parent_counts = np.zeros(k)
    np.add.at(parent_counts, y_idx, w)
    parent_gini = _gini_from_counts(parent_counts)
    total_w = parent_counts.sum()
    if total_w <= 0.0:
        return None
    best = None  # (gini, feature, threshold)
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        onehot = np.zeros((n, k))
        onehot[np.arange(n), y_idx[order]] = w[order]
        left_counts = np.cumsum(onehot, axis=0)
        # cut after position i means left = first i+1 rows
        cuts = np.nonzero(xs[:-1] < xs[1:])[0]
        if cuts.size:
            left_n = cuts + 1
            cuts = cuts[(left_n >= min_leaf) & (n - left_n >= min_leaf)]
        if cuts.size == 0:
            continue
        lc = left_counts[cuts]
        rc = parent_counts[None, :] - lc
        lw = lc.sum(axis=1)
        rw = total_w - lw
        with np.errstate(divide="ignore", invalid="ignore"):
            gini_l = np.where(lw > 0.0, 1.0 - (lc * lc).sum(axis=1) / (lw * lw), 0.0)
            gini_r = np.where(rw > 0.0, 1.0 - (rc * rc).sum(axis=1) / (rw * rw), 0.0)
        gini = (lw * gini_l + rw * gini_r) / total_w
        pick = int(np.argmax(gini <= gini.min() + 1e-12))
        if best is None or gini[pick] < best[0] - 1e-12:
            i = cuts[pick]
            best = (float(gini[pick]), f, 0.5 * (xs[i] + xs[i + 1]))
    if best is None or best[0] >= parent_gini - 1e-12:
        return None
    return best[1], best[2]


def dt_train_weighted(X, y, sample_weight=None, max_depth=None, min_leaf=1):
    """Greedy CART on weighted Gini impurity.

    sample_weight defaults to all ones; IWAL passes importance weights
    1/p. Deterministic given the input order.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64).ravel()
    if X.shape[0] != y.size or y.size < 1:
        raise ValueError("X and y must align and be nonempty")
    if sample_weight is None:
        w = np.ones(y.size)
    else:
        w = np.asarray(sample_weight, dtype=np.float64).ravel()
        if w.size != y.size or np.any(w < 0.0):
            raise ValueError("weights must align with y and be >= 0")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    classes = np.unique(y)

    def build(idx, depth):
        yy, ww = y[idx], w[idx]
        if (
            np.unique(yy).size == 1
            or (max_depth is not None and depth >= max_depth)
            or idx.size < 2 * min_leaf
        ):
            return TreeNode(label=_weighted_majority(yy, ww, classes))
        split = _best_split(X[idx], yy, ww, classes, min_leaf)
        if split is None:
            return TreeNode(label=_weighted_majority(yy, ww, classes))
        f, thr = split
        goes_left = X[idx, f] <= thr
        return TreeNode(
            feature=f,
            threshold=thr,
            left=build(idx[goes_left], depth + 1),
            right=build(idx[~goes_left], depth + 1),
        )

    root = build(np.arange(y.size), 0)
    return DecisionTree(root, X.shape[1], classes)


class RandomForest:
    """Majority vote over an odd number of binary trees."""

    labels = (-1, 1)

    def __init__(self, trees):
        if len(trees) % 2 == 0 or not trees:
            raise ValueError("forest size must be odd")
        self.trees = list(trees)
        self.n_features = trees[0].n_features
        for t in self.trees:
            if set(t.labels) - {-1, 1}:
                raise ValueError("forest trees must be binary with labels -1/+1")

    @property
    def dim(self):
        return self.n_features

    @property
    def o(self):
        return len(self.trees)

    def predict(self, x):
        votes = np.sum([t.predict(x) for t in self.trees], axis=0)
        out = np.where(np.asarray(votes) >= 0, 1, -1)
        if np.ndim(x) == 1:
            return int(out)
        return out.astype(np.int64)

    def to_json(self):
        return json.dumps(
            {"kind": "forest", "trees": [json.loads(t.to_json()) for t in self.trees]}
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("kind") != "forest":
            raise ValueError("not a serialized forest")
        return cls([DecisionTree.from_json(json.dumps(t)) for t in obj["trees"]])


def rf_train_weighted(X, y, sample_weight=None, o=5, max_depth=None, min_leaf=1, rng=None):
    """o bootstrap-resampled weighted trees (o must be odd, labels binary)."""
    if o % 2 == 0 or o < 1:
        raise ValueError("o must be odd and >= 1")
    y = np.asarray(y, dtype=np.int64).ravel()
    if set(np.unique(y)) - {-1, 1}:
        raise ValueError("forest training requires labels in {-1, +1}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if rng is None:
        rng = np.random.default_rng()
    w = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight)
    trees = []
    for _ in range(o):
        rows = rng.integers(0, y.size, y.size)
        trees.append(
            dt_train_weighted(X[rows], y[rows], w[rows], max_depth=max_depth, min_leaf=min_leaf)
        )
    return RandomForest(trees)
