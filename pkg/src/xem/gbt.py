"""Multiclass gradient-boosted regression trees with a softmax objective.

Each round fits one regression tree per class on the first and second order
gradients of the multiclass log-loss, using exact greedy split enumeration.
Missing values (NaN) are left out of the split statistics and sent as a
block to whichever side gives the larger gain; that side is stored as the
node's default direction and reused at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GBTParams:
    n_rounds: int = 30
    max_depth: int = 6
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ValueError("reg_lambda, gamma and min_child_weight must be >= 0")


@dataclass(frozen=True)
class SplitDecision:
    feature: int
    threshold: float
    gain: float
    default_left: bool

    @property
    def default_direction(self) -> str:
        return "left" if self.default_left else "right"


@dataclass(frozen=True)
class RegressionTree:
    """Array-encoded binary tree; node 0 is the root, ``feature == -1`` marks a leaf.

    A row goes left when ``x[feature] < threshold``; a NaN goes left iff
    ``default_left``. ``value`` holds the (already shrunk) leaf weights.
    """

    feature: np.ndarray
    threshold: np.ndarray
    default_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @cached_property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf weight reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            x = X[rows, np.where(internal, feat, 0)]
            go_left = np.where(np.isnan(x), self.default_left[node], x < self.threshold[node])
            child = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, child, node)
        return self.value[node]


@dataclass(frozen=True)
class GBTModel:
    trees: list[list[RegressionTree]]
    n_classes: int
    feature_count: int
    base_score: float = 0.0

    @property
    def n_rounds(self) -> int:
        return len(self.trees)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# threshold of a split that separates present values (left) from missing ones
PRESENT_THRESHOLD = float(np.finfo(float).max)


def _midpoints(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mid = (lo + hi) / 2.0
    # adjacent floats can round the midpoint down onto ``lo``
    return np.where(mid > lo, mid, hi)


def best_split(X, grad, hess, params: GBTParams, order=None) -> SplitDecision | None:
    """Best (feature, threshold, default direction) over all columns of ``X``.

    ``order`` is the column-wise stable argsort of ``X`` when the caller
    already has it. Ties go to the lower feature index, then the lower
    threshold, then to sending missing values left.
    """
    X = np.asarray(X, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    m, n_features = X.shape
    if m < 2 or n_features == 0:
        return None
    lam = params.reg_lambda
    if order is None:
        order = np.argsort(X, axis=0, kind="stable")  # NaN sorts last
    xs = np.take_along_axis(X, order, axis=0)
    present = ~np.isnan(xs)
    gs = np.where(present, grad[order], 0.0)
    hs = np.where(present, hess[order], 0.0)

    g_cum = np.cumsum(gs, axis=0)
    h_cum = np.cumsum(hs, axis=0)
    g_total = grad.sum()
    h_total = hess.sum()
    g_miss = g_total - g_cum[-1]
    h_miss = h_total - h_cum[-1]
    has_missing = ~present.all(axis=0)

    # row i < m-1: threshold between sorted positions i and i+1;
    # row m-1: every present value left, every missing value right
    candidate = np.empty((m, n_features), dtype=bool)
    candidate[:-1] = present[1:] & (xs[1:] > xs[:-1])
    candidate[-1] = has_missing & present[0]
    g_left, h_left = g_cum, h_cum
    parent = g_total * g_total / (h_total + lam)

    def gains(gl, hl):
        gr = g_total - gl
        hr = h_total - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
        ok = candidate & (hl >= params.min_child_weight) & (hr >= params.min_child_weight)
        return np.where(ok & np.isfinite(gain), gain, -np.inf)

    gain_left = gains(g_left + g_miss, h_left + h_miss)
    gain_left[-1] = -np.inf
    if has_missing.any():
        gain_right = np.where(has_missing, gains(g_left, h_left), -np.inf)
        go_right = gain_right > gain_left
        best = np.where(go_right, gain_right, gain_left)
    else:
        go_right = np.zeros_like(candidate)
        best = gain_left

    # feature-major flattening: argmax returns lowest feature, then lowest threshold
    flat = best.T.ravel()
    pos = int(np.argmax(flat))
    if not flat[pos] > params.gamma:
        return None
    f, i = divmod(pos, m)
    if i == m - 1:
        threshold = PRESENT_THRESHOLD
    else:
        threshold = float(_midpoints(xs[i, f], xs[i + 1, f]))
    return SplitDecision(f, threshold, float(flat[pos]), not bool(go_right[i, f]))


def find_split(feature_values, grad, hess, params: GBTParams) -> SplitDecision | None:
    """Best split of a single column; ``feature`` of the result is always 0.

    Thresholds are midpoints of consecutive distinct non-missing values, plus
    :data:`PRESENT_THRESHOLD` (all present values left, missing right) when
    the column has missing values. The returned ``gain`` is ``0.5 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) -
    G^2/(H+lambda))``; ``None`` when no split beats ``gamma`` or every
    candidate leaves a child with hessian sum below ``min_child_weight``.
    """
    x = np.asarray(feature_values, dtype=float).reshape(-1, 1)
    return best_split(x, np.asarray(grad, dtype=float), np.asarray(hess, dtype=float), params)


def _node_order(order: np.ndarray, idx: np.ndarray, m: int) -> np.ndarray:
    """Restrict a full-data column argsort to the (increasing) row ids ``idx``.

    The result indexes ``X[idx]`` and equals a stable argsort of it.
    """
    local = np.full(m, -1, dtype=np.int64)
    local[idx] = np.arange(len(idx))
    pos = local[order]
    return pos.T[pos.T >= 0].reshape(order.shape[1], len(idx)).T


def _grow_tree(X, grad, hess, params: GBTParams, out: np.ndarray,
               order: np.ndarray | None = None) -> RegressionTree:
    """Fit one regression tree; writes each training row's leaf weight into ``out``."""
    if order is None:
        order = np.argsort(X, axis=0, kind="stable")
    feature, threshold, default_left, left, right, value = [], [], [], [], [], []
    lam, eta = params.reg_lambda, params.learning_rate

    def new_node():
        for arr, v in ((feature, -1), (threshold, 0.0), (default_left, True),
                       (left, -1), (right, -1), (value, 0.0)):
            arr.append(v)
        return len(feature) - 1

    stack = [(np.arange(X.shape[0]), 0, new_node())]
    while stack:
        idx, depth, node = stack.pop()
        g, h = grad[idx], hess[idx]
        split = None
        # constant gradients cannot yield a positive gain; skip the search
        if depth < params.max_depth and len(idx) >= 2 and (np.ptp(g) > 0 or np.ptp(h) > 0):
            node_order = order if len(idx) == X.shape[0] else _node_order(order, idx, X.shape[0])
            split = best_split(X[idx], g, h, params, node_order)
        if split is None:
            hsum = h.sum()
            w = -eta * g.sum() / (hsum + lam) if hsum + lam > 0 else 0.0
            value[node] = w
            out[idx] = w
            continue
        x = X[idx, split.feature]
        go_left = np.where(np.isnan(x), split.default_left, x < split.threshold)
        feature[node] = split.feature
        threshold[node] = split.threshold
        default_left[node] = split.default_left
        left[node], right[node] = new_node(), new_node()
        stack.append((idx[~go_left], depth + 1, right[node]))
        stack.append((idx[go_left], depth + 1, left[node]))

    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(default_left, dtype=bool),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )


def _check_rows(rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"rows must be a 2-d matrix, got shape {X.shape}")
    return X


def fit_gbt(rows, labels, params: GBTParams | None = None, n_classes: int | None = None,
            *, callback=None) -> GBTModel:
    """Fit a softmax boosting model.

    Parameters
    ----------
    rows : (n, p) array
        Features, NaN for missing.
    labels : (n,) int array
        Class indices.
    params : GBTParams, optional
    n_classes : int, optional
        Number of output columns. Defaults to ``max(labels) + 1``; pass it
        explicitly when a subset of rows may not contain every class.
    callback : callable, optional
        Called as ``callback(round_index, probabilities)`` after each round
        with the training-set probabilities.

    Returns
    -------
    GBTModel
    """
    params = params or GBTParams()
    X = _check_rows(rows)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty row set")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must have one entry per row")
    k = int(y.max()) + 1 if n_classes is None else n_classes
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")

    onehot = np.eye(k)[y]
    order = np.argsort(X, axis=0, kind="stable")
    logits = np.zeros((X.shape[0], k))
    step = np.empty(X.shape[0])
    trees = []
    for r in range(params.n_rounds):
        p = softmax(logits)
        round_trees = []
        for c in range(k):
            grad = p[:, c] - onehot[:, c]
            hess = p[:, c] * (1.0 - p[:, c])
            round_trees.append(_grow_tree(X, grad, hess, params, step, order))
            logits[:, c] += step
        trees.append(round_trees)
        if callback is not None:
            callback(r, softmax(logits))
    return GBTModel(trees, k, X.shape[1])


def predict_proba_gbt(model: GBTModel, rows) -> np.ndarray:
    """Class probabilities, one row per input row."""
    X = _check_rows(rows)
    if X.shape[1] != model.feature_count:
        raise ValueError(f"expected {model.feature_count} features, got {X.shape[1]}")
    logits = np.full((X.shape[0], model.n_classes), model.base_score)
    for round_trees in model.trees:
        for c, tree in enumerate(round_trees):
            logits[:, c] += tree.apply(X)
    return softmax(logits)
