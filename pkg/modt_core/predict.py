"""
MoDT Core - 하드 게이팅 예측 / 평가
가장 높은 게이팅 값의 전문가(트리) 하나만 예측에 사용합니다.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .data import Dataset, FeatureEncoding
from .errors import WidthMismatch
from .gating import GatingModel, select_experts
from .tree import DecisionTree, decision_path, predict_class_batch

logger = logging.getLogger('MoDT.predict')


@dataclass(eq=False)
class MoDTModel:
    """
    학습된 Mixture of Decision Trees

    Attributes:
        gating (GatingModel): θ와 게이트 모드
        trees (List[DecisionTree]): 전문가 e개 (모두 같은 클래스 수)
        class_names (List[str]): 클래스 이름
        feature_names (List[str]): 인코딩된 특성 이름
        encoding (Optional[FeatureEncoding]): 원본 CSV 컬럼 인코딩 (예측 시 재사용)
        train_meta (Dict): 학습 설정과 trace 요약
    """

    gating: GatingModel
    trees: List[DecisionTree]
    class_names: List[str]
    feature_names: List[str]
    encoding: Optional[FeatureEncoding] = None
    train_meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.trees) != self.gating.e:
            raise ValueError(f"트리 수({len(self.trees)})와 게이트 전문가 수({self.gating.e})가 다릅니다")
        k_values = {t.n_classes for t in self.trees}
        if len(k_values) > 1:
            raise ValueError(f"전문가마다 클래스 수가 다릅니다: {sorted(k_values)}")

    @property
    def e(self) -> int:
        return self.gating.e

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def _check_input(model: MoDTModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.n_features:
        raise WidthMismatch(model.n_features, X.shape[1])
    return X


def predict_with_experts(model: MoDTModel, X: np.ndarray) -> tuple:
    """
    예측 클래스와 선택된 전문가 인덱스를 함께 돌려줍니다.

    Returns:
        (classes, experts): 둘 다 길이 m의 정수 배열
    """
    X = _check_input(model, X)
    experts = model.gating.select(X)
    classes = np.zeros(X.shape[0], dtype=np.intp)
    for j, tree in enumerate(model.trees):
        mask = experts == j
        if mask.any():
            classes[mask] = predict_class_batch(tree, X[mask])
    return classes, experts


def predict(model: MoDTModel, X: np.ndarray) -> np.ndarray:
    """행마다 선택된 전문가 트리의 예측 클래스"""
    classes, _ = predict_with_experts(model, X)
    return classes


def evaluate(model: MoDTModel, dataset: Dataset) -> float:
    """정확도 (맞춘 비율)"""
    if dataset.n_samples == 0:
        return 0.0
    return float(np.mean(predict(model, dataset.X) == dataset.y))


def model_complexity(model: MoDTModel, X: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """
    모델 복잡도 요약

    Args:
        model: 학습된 모델
        X: 주어지면 하드 게이트가 한 번 이상 고른 전문가 수(active_experts)를 계산

    Returns:
        Dict: total_nodes, expert_nodes, expert_depths, active_experts
    """
    expert_nodes = [t.node_count() for t in model.trees]
    summary: Dict[str, Any] = {
        'total_nodes': int(sum(expert_nodes)),
        'expert_nodes': expert_nodes,
        'expert_depths': [t.depth() for t in model.trees],
        'active_experts': None,
    }
    if X is not None:
        X = _check_input(model, X)
        summary['active_experts'] = int(np.unique(model.gating.select(X)).size)
    return summary


def explain(model: MoDTModel, x: Sequence[float]) -> Dict[str, Any]:
    """
    한 행의 예측을 사람이 따라갈 수 있는 형태로 풀어 씁니다.

    Returns:
        Dict: expert, gating_value, path (조건 문자열 목록), predicted_class
    """
    X = _check_input(model, x)
    G = model.gating.values(X)
    expert = int(select_experts(G)[0])
    steps, cls = decision_path(model.trees[expert], X[0], model.feature_names)
    return {
        'expert': expert,
        'gating_value': float(G[0, expert]),
        'path': steps,
        'predicted_class': model.class_names[cls],
    }
