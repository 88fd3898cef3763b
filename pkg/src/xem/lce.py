"""Local Cascade Ensemble: bagged cascade trees with a boosted model per node.

Growing a node: fit the boosted base classifier on the node's rows, append
its class probabilities as extra columns, then split the augmented matrix on
the column and threshold with the largest Gini decrease. Children therefore
see ``K`` more columns than their parent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gbt import GBTModel, GBTParams, SplitDecision, fit_gbt, predict_proba_gbt


@dataclass(frozen=True)
class LCEParams:
    n_trees: int = 10
    max_depth: int = 1
    gbt: GBTParams = field(default_factory=GBTParams)

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass(frozen=True)
class CascadeNode:
    """A cascade tree node.

    Uniform-class leaves carry ``leaf_class`` and no model. Every other node
    carries ``base``; internal nodes additionally carry a split on the
    augmented columns and two children.
    """

    base: GBTModel | None = None
    feature: int | None = None
    threshold: float | None = None
    default_left: bool = True
    left: "CascadeNode | None" = None
    right: "CascadeNode | None" = None
    leaf_class: int | None = None

    @property
    def is_split(self) -> bool:
        return self.left is not None

    def walk(self):
        yield self
        if self.is_split:
            yield from self.left.walk()
            yield from self.right.walk()


@dataclass(frozen=True)
class CascadeTree:
    root: CascadeNode
    n_classes: int
    input_width: int


@dataclass(frozen=True)
class LCEForest:
    trees: list[CascadeTree]
    n_classes: int
    input_width: int


def _class_counts(labels, n_classes):
    return np.bincount(labels, minlength=n_classes)


def gini_split(columns, labels, n_classes: int | None = None) -> SplitDecision | None:
    """Split with the largest Gini impurity decrease.

    Candidate thresholds are midpoints of consecutive distinct non-missing
    values of each column. Rows missing the candidate column all go to the
    child that makes the majority-vote accuracy of the two children highest,
    left on ties. Among equal decreases the lower column, then the lower
    threshold wins. Returns ``None`` when no candidate decreases impurity.
    """
    X = np.asarray(columns, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    m, n_cols = X.shape
    if m < 2 or n_cols == 0:
        return None
    k = int(y.max()) + 1 if n_classes is None else n_classes

    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    present = ~np.isnan(xs)
    onehot = np.eye(k, dtype=np.int64)[y]
    counts = onehot[order] * present[..., None]             # (m, n_cols, k)
    left = np.cumsum(counts, axis=0)[:-1]                   # candidate i: rows 0..i left
    total = _class_counts(y, k)
    missing = total - counts.sum(axis=0)                    # (n_cols, k)
    candidate = present[1:] & (xs[1:] > xs[:-1])

    acc_left = (left + missing).max(-1) + (total - left - missing).max(-1)
    acc_right = left.max(-1) + (total - left).max(-1)
    go_right = acc_right > acc_left
    left = np.where(go_right[..., None], left, left + missing)
    right = total - left

    n_left = left.sum(-1)
    n_right = right.sum(-1)
    # Gini decrease = (S - sum(total^2) / m) / m, with
    # S = sum(left^2) / n_left + sum(right^2) / n_right = num / den
    num = (left * left).sum(-1) * n_right + (right * right).sum(-1) * n_left
    den = n_left * n_right
    valid = candidate & (den > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(valid, num / den, -np.inf)

    flat = score.T.ravel()
    pos = int(np.argmax(flat))
    parent = float((total * total).sum()) / m
    if not flat[pos] > parent:
        return None
    f, i = divmod(pos, m - 1)
    lo, hi = xs[i, f], xs[i + 1, f]
    mid = (lo + hi) / 2.0
    threshold = float(mid if mid > lo else hi)
    decrease = (float(flat[pos]) - parent) / m
    return SplitDecision(f, threshold, decrease, not bool(go_right[i, f]))


def _route_left(x: np.ndarray, threshold: float, default_left: bool) -> np.ndarray:
    return np.where(np.isnan(x), default_left, x < threshold)


def fit_lce_tree(rows, labels, params: LCEParams, n_classes: int | None = None,
                 depth: int = 0) -> CascadeNode:
    """Grow one cascade (sub)tree on ``rows`` starting at ``depth``."""
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot grow a cascade tree on an empty row set")
    k = int(y.max()) + 1 if n_classes is None else n_classes
    if np.all(y == y[0]):
        return CascadeNode(leaf_class=int(y[0]))

    base = fit_gbt(X, y, params.gbt, k)
    if depth >= params.max_depth:
        return CascadeNode(base=base)
    augmented = np.hstack([X, predict_proba_gbt(base, X)])
    split = gini_split(augmented, y, k)
    if split is None:
        return CascadeNode(base=base)
    go_left = _route_left(augmented[:, split.feature], split.threshold, split.default_left)
    if go_left.all() or not go_left.any():
        return CascadeNode(base=base)
    return CascadeNode(
        base=base,
        feature=split.feature,
        threshold=split.threshold,
        default_left=split.default_left,
        left=fit_lce_tree(augmented[go_left], y[go_left], params, k, depth + 1),
        right=fit_lce_tree(augmented[~go_left], y[~go_left], params, k, depth + 1),
    )


def bootstrap_indices(n: int, seed: int) -> np.ndarray:
    """Sample ``n`` row indices with replacement."""
    return np.random.default_rng(seed).integers(0, n, size=n)


def fit_lce(rows, labels, params: LCEParams | None = None, seed: int = 0,
            n_classes: int | None = None, n_jobs: int = 1) -> LCEForest:
    """Bagged cascade trees; tree ``i`` is grown on the bootstrap drawn with ``seed + i``.

    ``n_jobs > 1`` grows trees in a thread pool. The result does not depend on it.
    """
    params = params or LCEParams()
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("rows must be a non-empty 2-d matrix")
    k = int(y.max()) + 1 if n_classes is None else n_classes

    def grow(i):
        idx = bootstrap_indices(X.shape[0], seed + i)
        return CascadeTree(fit_lce_tree(X[idx], y[idx], params, k), k, X.shape[1])

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, range(params.n_trees)))
    else:
        trees = [grow(i) for i in range(params.n_trees)]
    return LCEForest(trees, k, X.shape[1])


def _node_proba(node: CascadeNode, X: np.ndarray, k: int) -> np.ndarray:
    if node.leaf_class is not None:
        out = np.zeros((X.shape[0], k))
        out[:, node.leaf_class] = 1.0
        return out
    probs = predict_proba_gbt(node.base, X)
    if not node.is_split:
        return probs
    augmented = np.hstack([X, probs])
    go_left = _route_left(augmented[:, node.feature], node.threshold, node.default_left)
    out = np.empty((X.shape[0], k))
    for mask, child in ((go_left, node.left), (~go_left, node.right)):
        if mask.any():
            out[mask] = _node_proba(child, augmented[mask], k)
    return out


def predict_proba_tree(tree: CascadeTree, rows) -> np.ndarray:
    """Probabilities from the deepest model on each row's path (one-hot at uniform leaves)."""
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    if X.shape[1] != tree.input_width:
        raise ValueError(f"expected {tree.input_width} columns, got {X.shape[1]}")
    return _node_proba(tree.root, X, tree.n_classes)


def predict_proba_forest(forest: LCEForest, rows, n_jobs: int = 1) -> np.ndarray:
    """Mean of the per-tree probability vectors."""
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    if X.shape[1] != forest.input_width:
        raise ValueError(f"expected {forest.input_width} columns, got {X.shape[1]}")
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_tree = list(pool.map(lambda t: predict_proba_tree(t, X), forest.trees))
    else:
        per_tree = [predict_proba_tree(t, X) for t in forest.trees]
    return np.mean(per_tree, axis=0)


def predict_forest(forest: LCEForest, rows) -> np.ndarray:
    """Class labels: argmax of the mean probabilities."""
    return predict_proba_forest(forest, rows).argmax(axis=1)
