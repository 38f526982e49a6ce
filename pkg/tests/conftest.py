import pytest
import sys
import os

# Add project root to sys.path to allow importing modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pandas as pd
from modt_core.data import Dataset
from modt_core.gating import GateMode, GatingModel
from modt_core.predict import MoDTModel
from modt_core.tree import fit_tree


def three_band_data(n=450, seed=0):
    """x0 in [0,3] split into three vertical bands, each with its own x1 stump pattern"""
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.uniform(0, 3, n), rng.uniform(0, 1, n)])
    band = np.minimum(X[:, 0].astype(int), 2)
    y = np.where(band == 0, X[:, 1] > 0.5, np.where(band == 1, X[:, 1] <= 0.3, X[:, 1] > 0.7))
    return Dataset(X=X, y=y.astype(int), class_names=['neg', 'pos'], feature_names=['x0', 'x1'])


def diagonal_data(n=600, seed=0, margin=0.08):
    """
    Two regions split by x0 + x1 = 1, with no points closer than `margin` to that line.
    Below the line the label is (x0 > 0.5) OR (x1 > 0.5), above it (x0 > 0.5) AND (x1 > 0.5).
    """
    rng = np.random.default_rng(seed)
    kept = []
    while sum(len(block) for block in kept) < n:
        block = rng.uniform(0, 1, size=(2 * n, 2))
        kept.append(block[np.abs(block.sum(axis=1) - 1) >= margin])
    X = np.vstack(kept)[:n]
    a = X[:, 0] > 0.5
    b = X[:, 1] > 0.5
    upper = X[:, 0] + X[:, 1] > 1
    y = np.where(upper, a & b, a | b).astype(int)
    return Dataset(X=X, y=y, class_names=['0', '1'], feature_names=['x0', 'x1'])


def band_theta():
    """Gate whose argmax is expert 0 for x0<1, expert 1 for 1<x0<2, expert 2 for x0>2"""
    return np.array([
        [-10.0, 0.0, 10.0],   # x0
        [0.0, 0.0, 0.0],      # x1
        [10.0, 0.0, -20.0],   # bias
    ])


@pytest.fixture
def three_band():
    return three_band_data()


@pytest.fixture
def diagonal():
    return diagonal_data()


@pytest.fixture
def small_dataset():
    """10 points, 2 features, 2 classes"""
    X = np.array([
        [0.0, 1.0], [0.2, 0.8], [0.4, 0.6], [0.6, 0.4], [0.8, 0.2],
        [1.0, 0.0], [1.2, 0.4], [1.4, 0.6], [1.6, 0.8], [1.8, 1.0],
    ])
    y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1])
    return Dataset(X=X, y=y, class_names=['a', 'b'], feature_names=['f0', 'f1'])


@pytest.fixture
def band_model(three_band):
    """Hand-built 2D-gate model with the three-band gate and one stump per band"""
    theta = band_theta()
    band = np.minimum(three_band.X[:, 0].astype(int), 2)
    trees = [
        fit_tree(three_band.X, three_band.y, (band == j).astype(float), 1, 2)
        for j in range(3)
    ]
    return MoDTModel(
        gating=GatingModel(theta=theta, mode=GateMode.two_d(0, 1)),
        trees=trees,
        class_names=list(three_band.class_names),
        feature_names=list(three_band.feature_names),
    )


@pytest.fixture
def write_csv(tmp_path):
    """Writes a DataFrame and its schema sidecar, returns (csv_path, schema_path)"""
    def _write(name, frame, schema):
        csv_path = tmp_path / f"{name}.csv"
        schema_path = tmp_path / f"{name}.schema"
        frame.to_csv(csv_path, index=False)
        schema_path.write_text(''.join(f"{k}={v}\n" for k, v in schema.items()), encoding='utf-8')
        return str(csv_path), str(schema_path)
    return _write


@pytest.fixture
def band_csv(write_csv):
    d = three_band_data(n=300, seed=1)
    frame = pd.DataFrame({'x0': d.X[:, 0], 'x1': d.X[:, 1], 'label': [d.class_names[c] for c in d.y]})
    return write_csv('band', frame, {'x0': 'numeric', 'x1': 'numeric', 'label': 'target'})


@pytest.fixture
def diagonal_csv(write_csv):
    d = diagonal_data(n=300, seed=2)
    frame = pd.DataFrame({'x0': d.X[:, 0], 'x1': d.X[:, 1], 'label': [f"c{c}" for c in d.y]})
    return write_csv('diagonal', frame, {'x0': 'numeric', 'x1': 'numeric', 'label': 'target'})
