import pytest
import sys
import os

# Add project root to sys.path to allow importing modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from conftest import band_theta
from modt_core.errors import BadFeatureIndex, BadManualPair, NonFiniteInput, TooFewFeatures
from modt_core.gating import (
    GateMode, GatingModel, estimate_expert_count, gate_input, gating_values, gmm_bic_curve,
    init_theta, select_expert, select_experts, select_gating_features,
)


def naive_softmax(L):
    A = np.exp(L)
    return A / A.sum(axis=1, keepdims=True)


def test_gate_input_modes():
    """Test full and 2D gate inputs"""
    X = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])

    # Case 1: full
    Xg = gate_input(X, GateMode.full())
    assert Xg.shape == (2, 4)
    np.testing.assert_array_equal(Xg[:, -1], [1.0, 1.0])

    # Case 2: 2D column selection
    row = np.array([[10.0, 20.0, 30.0, 40.0]])
    np.testing.assert_array_equal(gate_input(row, GateMode.two_d(0, 2)), [[10.0, 30.0, 1.0]])

    # Case 3: same feature twice / out of range
    with pytest.raises(BadFeatureIndex):
        gate_input(X, GateMode.two_d(1, 1))
    with pytest.raises(BadFeatureIndex):
        gate_input(X, GateMode.two_d(0, 3))


def test_gating_values_examples():
    """Test uniform, shift-invariant and direct softmax values"""
    # Case 1: theta zeros -> uniform rows
    Xg = np.random.default_rng(0).normal(size=(5, 3))
    G = gating_values(Xg, np.zeros((3, 3)))
    np.testing.assert_allclose(G, np.full((5, 3), 1.0 / 3.0))

    # Case 2: logits [ln 7, ln 2, ln 1] -> [0.7, 0.2, 0.1]
    theta = np.array([[np.log(7.0), np.log(2.0), 0.0]])
    G = gating_values(np.ones((1, 1)), theta)
    np.testing.assert_allclose(G, [[0.7, 0.2, 0.1]], atol=1e-12)

    # Case 3: adding a constant to a logits row does not change G
    theta_shift = np.array([[np.log(7.0) + 5.0, np.log(2.0) + 5.0, 5.0]])
    np.testing.assert_allclose(gating_values(np.ones((1, 1)), theta_shift), G, atol=1e-12)


def test_gating_values_row_stochastic_and_stable():
    """Test simplex rows for large logits and agreement with naive softmax"""
    rng = np.random.default_rng(1)
    for trial in range(1000):
        n, q, e = rng.integers(1, 6), rng.integers(1, 4), rng.integers(1, 5)
        scale = 10.0 ** rng.uniform(-2, 6)
        Xg = np.hstack([rng.normal(size=(n, q)), np.ones((n, 1))])
        theta = rng.normal(size=(q + 1, e)) * scale / (q + 1)
        G = gating_values(Xg, theta)
        assert np.all(G >= 0)
        np.testing.assert_allclose(G.sum(axis=1), np.ones(n), atol=1e-9)

        L = Xg @ theta
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            naive = naive_softmax(L)
        if np.all(np.isfinite(naive)):
            np.testing.assert_allclose(G, naive, atol=1e-9)


def test_gating_values_rejects_non_finite():
    """Test NonFiniteInput"""
    with pytest.raises(NonFiniteInput):
        gating_values(np.array([[np.nan, 1.0]]), np.zeros((2, 2)))


def test_select_expert_ties_and_scale():
    """Test argmax selection"""
    assert select_expert([0.7, 0.2, 0.1]) == 0
    assert select_expert([0.5, 0.5]) == 0
    row = np.array([0.1, 0.6, 0.3])
    assert select_expert(row * 17.0) == select_expert(row) == 1
    np.testing.assert_array_equal(select_experts(np.array([[0.2, 0.8], [0.5, 0.5]])), [1, 0])


def test_init_theta():
    """Test determinism, range and single-expert behaviour"""
    a = init_theta(3, 4, seed=7)
    b = init_theta(3, 4, seed=7)
    assert a.shape == (4, 4)
    np.testing.assert_array_equal(a, b)

    big = init_theta(99, 100, seed=1)
    assert big.min() >= -1.0 and big.max() <= 1.0

    theta = init_theta(2, 1, seed=3) * 1000
    Xg = np.hstack([np.random.default_rng(2).normal(size=(10, 2)), np.ones((10, 1))])
    np.testing.assert_array_equal(gating_values(Xg, theta), np.ones((10, 1)))


def test_gating_model_select():
    """Test GatingModel on the three-band gate"""
    model = GatingModel(theta=band_theta(), mode=GateMode.two_d(0, 1))
    assert model.e == 3
    experts = model.select(np.array([[0.5, 0.1], [1.5, 0.9], [2.5, 0.5]]))
    assert experts.tolist() == [0, 1, 2]


def test_select_gating_features_two_features():
    """Test that p=2 always yields (0, 1)"""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 2))
    y = (X[:, 1] > 0).astype(int)
    for method in ('tree_importance', 'linear_importance', 'pca'):
        assert select_gating_features(X, y, method) == (0, 1)


def test_select_gating_features_finds_informative_feature():
    """Test that the only informative feature ranks first"""
    rng = np.random.default_rng(4)
    n = 120
    X = np.column_stack([rng.uniform(0, 1, n), np.full(n, 2.0), np.full(n, -1.0), rng.uniform(0, 1, n) * 0.01])
    y = (X[:, 0] > 0.5).astype(int)
    i, j = select_gating_features(X, y, 'tree_importance')
    assert i == 0
    i, j = select_gating_features(X, y, 'linear_importance')
    assert i == 0
    assert i != j


def test_select_gating_features_pca():
    """Test that PCA picks the two correlated high-variance features"""
    rng = np.random.default_rng(5)
    z = rng.normal(size=200)
    X = np.column_stack([rng.normal(size=200), z, rng.normal(size=200), z + 0.01 * rng.normal(size=200)])
    y = (z > 0).astype(int)
    assert set(select_gating_features(X, y, 'pca')) == {1, 3}


def test_select_gating_features_manual_and_errors():
    """Test manual pair echo and errors"""
    X = np.zeros((10, 5))
    y = np.zeros(10, dtype=int)
    assert select_gating_features(X, y, 'manual', (3, 1)) == (3, 1)

    with pytest.raises(BadManualPair):
        select_gating_features(X, y, 'manual', (2, 2))
    with pytest.raises(BadManualPair):
        select_gating_features(X, y, 'manual', (0, 5))
    with pytest.raises(TooFewFeatures):
        select_gating_features(np.zeros((10, 1)), y, 'tree_importance')


def test_estimate_expert_count_blobs():
    """Test BIC selection on three separated spherical blobs"""
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    X = np.vstack([c + rng.normal(scale=0.5, size=(60, 2)) for c in centers])
    assert estimate_expert_count(X, 6, seed=0) == 3

    bics = gmm_bic_curve(X, 6, seed=0)
    assert int(np.argmin(bics)) == 2


def test_estimate_expert_count_degenerate():
    """Test identical points and e_max=1"""
    X = np.ones((20, 3))
    assert estimate_expert_count(X, 4) == 1
    assert estimate_expert_count(np.random.default_rng(1).normal(size=(20, 2)), 1) == 1
