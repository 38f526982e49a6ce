"""
MoDT Core - 랜덤 포레스트 기준 모델
부트스트랩 샘플 + 노드별 ceil(√p) 특성 부분집합, 다수결 예측.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import EmptyInput, WidthMismatch
from .tree import DecisionTree, fit_tree, predict_class_batch

logger = logging.getLogger('MoDT.forest')


@dataclass(eq=False)
class RandomForest:
    trees: List[DecisionTree]
    max_depth: Optional[int]
    n_classes: int
    n_features: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def node_count(self) -> int:
        return int(sum(t.node_count() for t in self.trees))


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int,
    max_depth: Optional[int],
    seed: int,
    k: Optional[int] = None,
) -> RandomForest:
    """
    랜덤 포레스트를 학습합니다.

    Args:
        X, y: 학습 데이터
        n_trees: 트리 개수
        max_depth: 최대 깊이 (None이면 순수 노드까지)
        seed: 부트스트랩/특성 샘플링 seed
        k: 클래스 수 (None이면 y.max()+1)

    Returns:
        RandomForest
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("랜덤 포레스트 학습 데이터가 비어 있습니다")
    if n_trees < 1:
        raise ValueError(f"n_trees는 1 이상이어야 합니다: {n_trees}")

    n, p = X.shape
    k = int(y.max()) + 1 if k is None else k
    max_features = max(1, math.ceil(math.sqrt(p)))
    rng = np.random.default_rng(seed)

    trees = []
    for _ in range(n_trees):
        sample = rng.integers(0, n, size=n)
        trees.append(fit_tree(X[sample], y[sample], np.ones(n), max_depth, k, max_features=max_features, rng=rng))

    logger.debug(f"🌲 랜덤 포레스트 {n_trees}그루 학습 (max_features={max_features}, depth={max_depth})")
    return RandomForest(trees=trees, max_depth=max_depth, n_classes=k, n_features=p)


def rf_predict(forest: RandomForest, X: np.ndarray) -> np.ndarray:
    """트리별 예측의 다수결 (동점이면 낮은 클래스 인덱스)"""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != forest.n_features:
        raise WidthMismatch(forest.n_features, X.shape[1])

    votes = np.zeros((X.shape[0], forest.n_classes), dtype=np.intp)
    rows = np.arange(X.shape[0])
    for tree in forest.trees:
        votes[rows, predict_class_batch(tree, X)] += 1
    return np.argmax(votes, axis=1).astype(np.intp)
