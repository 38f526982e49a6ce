import pytest
import sys
import os

# Add project root to sys.path to allow importing modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from modt_core.errors import AllWeightsZero, EmptyInput, NonFiniteInput, WidthMismatch, ZeroMass
from modt_core.tree import (
    DecisionTree, Internal, Leaf, decision_path, export_text, feature_importances, fit_tree,
    gini, predict_class, predict_class_batch, predict_proba, predict_proba_batch,
)


def weighted_gini(y, w, k):
    mass = np.bincount(y, weights=w, minlength=k)
    total = mass.sum()
    return 1.0 - np.sum((mass / total) ** 2)


def best_split_bruteforce(X, y, w, k):
    """Exhaustive search over every feature and every midpoint threshold"""
    keep = w >= 1e-12
    X, y, w = X[keep], y[keep], w[keep]
    total = w.sum()
    best = np.inf
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            t = 0.5 * (lo + hi)
            left = X[:, f] <= t
            score = (
                w[left].sum() * weighted_gini(y[left], w[left], k)
                + w[~left].sum() * weighted_gini(y[~left], w[~left], k)
            ) / total
            best = min(best, score)
    return best


def test_gini_values():
    """Test Gini impurity on simple masses"""
    assert gini([5, 0]) == 0.0
    assert gini([1, 1]) == pytest.approx(0.5)
    assert gini([2, 2, 2]) == pytest.approx(2.0 / 3.0)

    with pytest.raises(ZeroMass):
        gini([0, 0])


def test_stump_on_separable_data():
    """Test a depth-1 tree on linearly separable 1-D data"""
    X = np.array([[1.0], [2.0], [3.0], [10.0], [11.0], [12.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    tree = fit_tree(X, y, np.ones(6), 1, 2)
    assert isinstance(tree.root, Internal)
    assert tree.root.threshold == pytest.approx(6.5)
    assert tree.node_count() == 3
    assert predict_class_batch(tree, X).tolist() == y.tolist()


def test_pure_node_is_leaf():
    """Test that a pure dataset yields a single leaf"""
    X = np.random.default_rng(0).normal(size=(8, 2))
    tree = fit_tree(X, np.zeros(8, dtype=int), np.ones(8), 3, 2)
    assert isinstance(tree.root, Leaf)
    np.testing.assert_allclose(tree.root.distribution, [1.0, 0.0])


def test_leaf_distribution_from_weights():
    """Test that leaf distributions follow sample weights"""
    X = np.zeros((4, 1))
    y = np.array([0, 1, 1, 1])
    w = np.array([3.0, 1.0, 0.5, 0.5])
    tree = fit_tree(X, y, w, 2, 2)
    np.testing.assert_allclose(predict_proba(tree, [0.0]), [0.6, 0.4])
    assert predict_class(tree, [0.0]) == 0


def test_zero_weight_samples_ignored_for_splits():
    """Test that zero-weight samples do not drive the split search"""
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    w = np.array([1.0, 0.0, 1.0, 0.0])
    tree = fit_tree(X, y, w, 2, 2)
    assert isinstance(tree.root, Leaf)
    assert tree.root.majority_class == 0


def test_tie_breaks_lowest_feature_then_threshold():
    """Test deterministic tie-break among equally good splits"""
    # Case 1: two identical features -> feature 0
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    tree = fit_tree(X, y, np.ones(4), 1, 2)
    assert tree.root.feature_index == 0

    # Case 2: symmetric labels give equal scores -> lowest threshold
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([0, 1, 0])
    tree = fit_tree(X, y, np.ones(3), 1, 2)
    assert tree.root.threshold == pytest.approx(0.5)


def test_depth_limit_respected():
    """Test that no path exceeds the configured depth"""
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 3))
    y = rng.integers(0, 3, size=200)
    for d in (1, 2, 3):
        tree = fit_tree(X, y, np.ones(200), d, 3)
        assert tree.depth() <= d
        assert tree.node_count() <= 2 ** (d + 1) - 1


def test_unrestricted_depth_grows_to_purity():
    """Test that d=None fits distinct points perfectly"""
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 2))
    y = rng.integers(0, 2, size=40)
    tree = fit_tree(X, y, np.ones(40), None, 2)
    assert np.all(predict_class_batch(tree, X) == y)


def test_cart_matches_exhaustive_search():
    """Test each greedy split against an exhaustive enumeration on random data"""
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = int(rng.integers(5, 51))
        p = int(rng.integers(1, 4))
        k = int(rng.integers(2, 4))
        d = int(rng.integers(1, 3))
        X = np.round(rng.normal(size=(n, p)), 2)
        y = rng.integers(0, k, size=n)
        w = rng.uniform(0.1, 2.0, size=n)
        tree = fit_tree(X, y, w, d, k)

        # walk the tree and check every internal node against the brute-force optimum
        stack = [(tree.root, np.arange(n))]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, Leaf):
                continue
            left = X[idx, node.feature_index] <= node.threshold
            wl, wr = w[idx][left], w[idx][~left]
            score = (
                wl.sum() * weighted_gini(y[idx][left], wl, k)
                + wr.sum() * weighted_gini(y[idx][~left], wr, k)
            ) / w[idx].sum()
            assert score == pytest.approx(best_split_bruteforce(X[idx], y[idx], w[idx], k), abs=1e-9)
            stack.append((node.left, idx[left]))
            stack.append((node.right, idx[~left]))


def test_fit_tree_input_errors():
    """Test forced error cases"""
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])

    # Case 1: empty
    with pytest.raises(EmptyInput):
        fit_tree(np.zeros((0, 1)), np.zeros(0, dtype=int), np.zeros(0), 1, 2)

    # Case 2: NaN feature
    with pytest.raises(NonFiniteInput):
        fit_tree(np.array([[np.nan], [1.0]]), y, np.ones(2), 1, 2)

    # Case 3: all weights zero
    with pytest.raises(AllWeightsZero):
        fit_tree(X, y, np.zeros(2), 1, 2)


def test_batch_prediction_matches_single():
    """Test that batch routing agrees with per-row routing"""
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    y = rng.integers(0, 3, size=60)
    tree = fit_tree(X, y, np.ones(60), 3, 3)
    P = predict_proba_batch(tree, X)
    for i in range(60):
        np.testing.assert_array_equal(P[i], predict_proba(tree, X[i]))
        assert predict_class(tree, X[i]) == predict_class_batch(tree, X)[i]
    np.testing.assert_allclose(P.sum(axis=1), np.ones(60))

    with pytest.raises(WidthMismatch):
        predict_class_batch(tree, X[:, :2])


def test_serialization_preserves_structure():
    """Test to_dict / from_dict keeps thresholds and distributions exactly"""
    rng = np.random.default_rng(6)
    X = rng.normal(size=(80, 2))
    y = rng.integers(0, 2, size=80)
    tree = fit_tree(X, y, rng.uniform(0.5, 1.5, 80), 2, 2)
    clone = DecisionTree.from_dict(tree.to_dict())
    assert clone.to_dict() == tree.to_dict()
    np.testing.assert_array_equal(predict_proba_batch(clone, X), predict_proba_batch(tree, X))


def test_interpretation_helpers():
    """Test importances, decision path and text export"""
    X = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    y = np.array([0, 0, 1, 1])
    tree = fit_tree(X, y, np.ones(4), 2, 2)

    imp = feature_importances(tree)
    assert imp[0] > 0 and imp[1] == 0

    steps, cls = decision_path(tree, [2.5, 5.0], ['width', 'height'])
    assert steps == ['width > 1.5']
    assert cls == 1

    text = export_text(tree, ['width', 'height'], ['small', 'large'])
    assert 'width <= 1.5' in text
    assert 'class: large' in text
