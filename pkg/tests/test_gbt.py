import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import gbt_split_oracle, multiclass_logloss

from xem.gbt import (
    PRESENT_THRESHOLD,
    GBTModel,
    GBTParams,
    best_split,
    find_split,
    fit_gbt,
    predict_proba_gbt,
    softmax,
)

# dyadic values keep every gradient sum exact, so the oracle comparison is bit-for-bit
VALUES = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, math.nan]
GRADS = [i / 8 for i in range(-8, 9)]
HESSES = [i / 8 for i in range(1, 9)]


@st.composite
def split_problems(draw, max_rows=8, max_features=3):
    m = draw(st.integers(2, max_rows))
    p = draw(st.integers(1, max_features))
    X = np.array(draw(st.lists(st.sampled_from(VALUES), min_size=m * p, max_size=m * p))).reshape(m, p)
    grad = np.array(draw(st.lists(st.sampled_from(GRADS), min_size=m, max_size=m)))
    hess = np.array(draw(st.lists(st.sampled_from(HESSES), min_size=m, max_size=m)))
    lam = draw(st.sampled_from([0.0, 0.5, 1.0, 2.0]))
    mcw = draw(st.sampled_from([0.0, 0.25, 1.0]))
    gamma = draw(st.sampled_from([0.0, 0.0, 0.125]))
    return X, grad, hess, GBTParams(1, 1, 0.5, lam, gamma, mcw)


# the worked examples use two-row nodes whose children weigh 0.25, so they
# need min_child_weight below the library default of 1
LOOSE = GBTParams(reg_lambda=1.0, gamma=0.0, min_child_weight=0.0)


def test_find_split_documented_example():
    split = find_split([1.0, 2.0], [-0.5, 0.5], [0.25, 0.25], LOOSE)
    assert split.threshold == 1.5
    assert split.gain == pytest.approx(0.5 * (0.25 / 1.25 + 0.25 / 1.25 - 0.0 / 1.5))
    assert split.default_direction == "left"


def test_find_split_identical_values():
    assert find_split([3.0, 3.0, 3.0], [-0.5, 0.5, 0.1], [0.25] * 3, GBTParams()) is None


def test_find_split_value_and_missing():
    split = find_split([1.0, math.nan], [-0.5, 0.5], [0.25, 0.25], LOOSE)
    # the only way to separate the rows is present-left / missing-right
    assert split.threshold == PRESENT_THRESHOLD
    assert split.default_direction == "right"
    assert split.gain == pytest.approx(0.2)


def test_find_split_missing_direction_picks_better_side():
    # the missing row behaves like the high values, so it must go right
    x = [1.0, 2.0, 3.0, math.nan]
    g = [-0.5, 0.5, 0.5, 0.5]
    split = find_split(x, g, [0.25] * 4, LOOSE)
    assert split.threshold == 1.5
    assert split.default_direction == "right"


def test_find_split_respects_min_child_weight():
    params = GBTParams(min_child_weight=1.0)
    assert find_split([1.0, 2.0], [-0.5, 0.5], [0.25, 0.25], params) is None


@given(split_problems())
def test_best_split_matches_oracle(problem):
    X, grad, hess, params = problem
    got = best_split(X, grad, hess, params)
    want = gbt_split_oracle(X, grad, hess, params.reg_lambda, params.gamma, params.min_child_weight)
    if want is None:
        assert got is None
    else:
        assert (got.feature, got.threshold, got.default_left) == want[:3]
        assert got.gain == want[3]


# --- fitting ----------------------------------------------------------------------


def test_stump_leaf_weights():
    params = GBTParams(n_rounds=1, max_depth=1, learning_rate=0.3, reg_lambda=1.0, min_child_weight=0.0)
    model = fit_gbt([[0.0], [1.0]], [0, 1], params)
    assert model.n_rounds == 1 and len(model.trees[0]) == 2
    # at uniform start p = 0.5: class-0 gradients are -0.5 / +0.5, hessians 0.25
    leaf = -0.3 * (-0.5) / (0.25 + 1.0)
    for c, sign in ((0, 1.0), (1, -1.0)):
        tree = model.trees[0][c]
        assert tree.feature[0] == 0 and tree.threshold[0] == 0.5
        np.testing.assert_allclose(tree.value[[tree.left[0], tree.right[0]]],
                                   [sign * leaf, -sign * leaf])
    probs = predict_proba_gbt(model, [[0.0], [1.0]])
    assert probs.argmax(axis=1).tolist() == [0, 1]


def test_single_label_every_tree_is_a_leaf():
    # lambda shrinks every leaf, so the bound needs enough rows to outweigh it
    X = np.arange(400.0).reshape(200, 2)
    model = fit_gbt(X, [1] * 200, n_classes=2)
    assert all(t.n_nodes == 1 for r in model.trees for t in r)
    assert predict_proba_gbt(model, [[0.0, 0.0]])[0, 1] > 1 - 1e-3
    solo = fit_gbt(X[:3], [0, 0, 0])
    assert predict_proba_gbt(solo, X[:1])[0, 0] == 1.0


def test_all_missing_feature_is_never_used():
    rng = np.random.default_rng(0)
    X = np.column_stack([np.full(30, np.nan), rng.normal(size=30)])
    y = (X[:, 1] > 0).astype(int)
    model = fit_gbt(X, y, GBTParams(n_rounds=5))
    used = {int(f) for r in model.trees for t in r for f in t.feature if f >= 0}
    assert used == {1}


def test_missing_rows_follow_default_direction():
    X = np.array([[1.0], [2.0], [3.0], [np.nan], [np.nan]])
    y = [0, 1, 1, 1, 1]
    model = fit_gbt(X, y, GBTParams(n_rounds=3, max_depth=1))
    probs = predict_proba_gbt(model, [[np.nan], [3.0]])
    np.testing.assert_allclose(probs[0], probs[1])


def test_zero_round_model_is_uniform():
    model = GBTModel([], 3, 2)
    np.testing.assert_allclose(predict_proba_gbt(model, np.zeros((4, 2))), 1 / 3)


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_gbt(np.empty((0, 2)), [])
    with pytest.raises(ValueError):
        fit_gbt([[1.0], [2.0]], [0, 2], n_classes=2)
    with pytest.raises(ValueError):
        fit_gbt([[1.0], [2.0]], [0])
    model = fit_gbt([[1.0], [2.0]], [0, 1])
    with pytest.raises(ValueError):
        predict_proba_gbt(model, [[1.0, 2.0]])


@pytest.mark.parametrize("kwargs", [
    {"n_rounds": 0}, {"max_depth": 0}, {"learning_rate": 0.0}, {"learning_rate": 1.5},
    {"reg_lambda": -1.0}, {"gamma": -0.1}, {"min_child_weight": -1.0},
])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        GBTParams(**kwargs)


def _random_problem(seed, max_rows=40):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, max_rows))
    p = int(rng.integers(1, 5))
    k = int(rng.integers(2, 5))
    X = rng.normal(size=(m, p))
    X[rng.random((m, p)) < 0.15] = np.nan
    y = rng.integers(0, k, size=m)
    return X, y, k


@pytest.mark.parametrize("seed", range(20))
def test_training_loss_non_increasing(seed):
    X, y, k = _random_problem(seed)
    losses = [math.log(k)]
    fit_gbt(X, y, GBTParams(n_rounds=15, max_depth=3), k,
            callback=lambda r, p: losses.append(multiclass_logloss(p, y)))
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))


@pytest.mark.parametrize("seed", range(10))
def test_probabilities_normalized_and_callback_agrees(seed):
    X, y, k = _random_problem(seed)
    seen = []
    model = fit_gbt(X, y, GBTParams(n_rounds=4), k, callback=lambda r, p: seen.append(p))
    probs = predict_proba_gbt(model, X)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(probs, seen[-1], atol=1e-12)


def test_row_order_invariance():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 3))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    perm = rng.permutation(50)
    a = fit_gbt(X, y, GBTParams(n_rounds=5))
    b = fit_gbt(X[perm], y[perm], GBTParams(n_rounds=5))
    probe = rng.normal(size=(20, 3))
    np.testing.assert_allclose(predict_proba_gbt(a, probe), predict_proba_gbt(b, probe), atol=1e-12)


def test_deterministic_refit():
    X, y, k = _random_problem(7)
    a = fit_gbt(X, y, n_classes=k)
    b = fit_gbt(X, y, n_classes=k)
    for ra, rb in zip(a.trees, b.trees):
        for ta, tb in zip(ra, rb):
            np.testing.assert_array_equal(ta.threshold, tb.threshold)
            np.testing.assert_array_equal(ta.value, tb.value)


def test_tree_invariants():
    X, y, k = _random_problem(11)
    model = fit_gbt(X, y, GBTParams(n_rounds=3, max_depth=4), k)
    assert len(model.trees) == 3 and all(len(r) == k for r in model.trees)
    for r in model.trees:
        for t in r:
            internal = t.feature >= 0
            assert np.all(t.feature[internal] < model.feature_count)
            assert np.all(t.left[internal] > np.flatnonzero(internal))
            assert t.depth <= 4


def test_softmax():
    np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])
    big = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(big)) and big[0] == pytest.approx(1.0)
    z = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(softmax(z + 7.5), softmax(z), atol=1e-15)
    assert abs(softmax(z).sum() - 1.0) < 1e-12
