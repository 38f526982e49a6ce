"""
MoDT Core - 가중치 지원 CART 결정트리
MoDT의 전문가(expert). 깊이 제한, 샘플 가중치, 클래스 확률 예측을 지원합니다.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AllWeightsZero, EmptyInput, NonFiniteInput, WidthMismatch, ZeroMass

# 이 값보다 작은 가중치의 샘플은 분할 탐색에서 제외 (리프 분포에는 그대로 반영)
MIN_SPLIT_WEIGHT = 1e-12
# 분할 점수 비교 허용 오차 (동점이면 낮은 특성 인덱스 → 낮은 임계값)
TIE_TOLERANCE = 1e-12


# ==========================================
# 노드 타입
# ==========================================

@dataclass(frozen=True, eq=False)
class Leaf:
    """리프 노드: 도달한 샘플들의 가중 클래스 분포"""

    distribution: np.ndarray
    weight: float = 0.0
    majority_class: int = field(init=False)

    def __post_init__(self) -> None:
        # 동점이면 낮은 클래스 인덱스
        object.__setattr__(self, 'majority_class', int(np.argmax(self.distribution)))


@dataclass(frozen=True, eq=False)
class Internal:
    """내부 노드: x[feature_index] <= threshold 이면 left, 아니면 right"""

    feature_index: int
    threshold: float
    left: 'TreeNode'
    right: 'TreeNode'
    weight: float = 0.0
    impurity: float = 0.0
    impurity_decrease: float = 0.0


TreeNode = Union[Internal, Leaf]


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """
    학습이 끝난 이진 결정트리 (불변 객체, 스레드 간 공유 가능)

    Attributes:
        root (TreeNode): 루트 노드
        max_depth (Optional[int]): 깊이 제한 (None이면 무제한, 랜덤 포레스트용)
        n_classes (int): 클래스 수 k
        n_features (int): 학습 특성 수 p
    """

    root: TreeNode
    max_depth: Optional[int]
    n_classes: int
    n_features: int

    def node_count(self) -> int:
        return _count_nodes(self.root)

    def depth(self) -> int:
        return _depth(self.root)

    def leaves(self) -> List[Leaf]:
        found: List[Leaf] = []
        stack: List[TreeNode] = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                found.append(node)
            else:
                stack.extend([node.right, node.left])
        return found

    # ------------------------------------------
    # 직렬화 (모델 파일용)
    # ------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            'max_depth': self.max_depth,
            'n_classes': self.n_classes,
            'n_features': self.n_features,
            'root': _node_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DecisionTree':
        return cls(
            root=_node_from_dict(data['root']),
            max_depth=data['max_depth'],
            n_classes=int(data['n_classes']),
            n_features=int(data['n_features']),
        )


def _count_nodes(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + _count_nodes(node.left) + _count_nodes(node.right)


def _depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _node_to_dict(node: TreeNode) -> Dict[str, Any]:
    if isinstance(node, Leaf):
        return {'leaf': [float(v) for v in node.distribution], 'weight': float(node.weight)}
    return {
        'feature': int(node.feature_index),
        'threshold': float(node.threshold),
        'weight': float(node.weight),
        'impurity': float(node.impurity),
        'decrease': float(node.impurity_decrease),
        'left': _node_to_dict(node.left),
        'right': _node_to_dict(node.right),
    }


def _node_from_dict(data: Dict[str, Any]) -> TreeNode:
    if 'leaf' in data:
        return Leaf(np.asarray(data['leaf'], dtype=np.float64), float(data.get('weight', 0.0)))
    return Internal(
        feature_index=int(data['feature']),
        threshold=float(data['threshold']),
        left=_node_from_dict(data['left']),
        right=_node_from_dict(data['right']),
        weight=float(data.get('weight', 0.0)),
        impurity=float(data.get('impurity', 0.0)),
        impurity_decrease=float(data.get('decrease', 0.0)),
    )


# ==========================================
# 불순도
# ==========================================

def gini(weighted_class_mass: Sequence[float]) -> float:
    """
    가중 클래스 질량으로 Gini 불순도를 계산합니다: 1 - Σ (m_c / M)²

    Args:
        weighted_class_mass: 클래스별 가중치 합 (음수 불가)

    Returns:
        float: [0, 1 - 1/k] 범위의 불순도
    """
    mass = np.asarray(weighted_class_mass, dtype=np.float64)
    total = float(mass.sum())
    if total <= 0.0:
        raise ZeroMass("질량 합이 0인 노드의 Gini는 정의되지 않습니다")
    p = mass / total
    return float(1.0 - np.dot(p, p))


# ==========================================
# 학습
# ==========================================

def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    d: Optional[int],
    k: int,
    max_features: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> DecisionTree:
    """
    가중 Gini를 최소화하는 탐욕적 CART로 트리를 학습합니다.

    Args:
        X (np.ndarray): n×p 특성 행렬
        y (np.ndarray): n개의 클래스 인덱스
        w (np.ndarray): n개의 비음수 샘플 가중치 (MoDT에서는 게이팅 값 한 열)
        d (Optional[int]): 최대 깊이 (None이면 순수 노드까지 성장)
        k (int): 클래스 수
        max_features (Optional[int]): 노드마다 무작위로 고를 특성 수 (랜덤 포레스트용)
        rng (Optional[np.random.Generator]): max_features 사용 시 난수 생성기

    Returns:
        DecisionTree
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    w = np.asarray(w, dtype=np.float64)

    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("학습 데이터가 비어 있습니다")
    n, p = X.shape
    if y.shape != (n,) or w.shape != (n,):
        raise ValueError("X, y, w의 길이가 맞지 않습니다")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(w)):
        raise NonFiniteInput("X 또는 가중치에 NaN/inf가 있습니다")
    if np.any(w < 0):
        raise ValueError("가중치는 음수일 수 없습니다")
    if w.sum() <= 0.0:
        raise AllWeightsZero("모든 샘플 가중치가 0입니다")
    if d is not None and d < 1:
        raise ValueError(f"최대 깊이 d는 1 이상이어야 합니다: {d}")
    if y.size and (y.min() < 0 or y.max() >= k):
        raise ValueError(f"클래스 인덱스는 [0, {k}) 범위여야 합니다")
    if max_features is not None and rng is None:
        rng = np.random.default_rng(0)

    builder = _TreeBuilder(X, y, w, d, k, max_features, rng)
    root = builder.build(np.arange(n), depth=0, parent_distribution=None)
    return DecisionTree(root=root, max_depth=d, n_classes=k, n_features=p)


class _TreeBuilder:
    """재귀 분할 (내부용)"""

    def __init__(self, X, y, w, d, k, max_features, rng) -> None:
        self.X = X
        self.y = y
        self.w = w
        self.d = d
        self.k = k
        self.max_features = max_features
        self.rng = rng

    def _class_mass(self, idx: np.ndarray) -> np.ndarray:
        return np.bincount(self.y[idx], weights=self.w[idx], minlength=self.k).astype(np.float64)

    def build(self, idx: np.ndarray, depth: int, parent_distribution: Optional[np.ndarray]) -> TreeNode:
        mass = self._class_mass(idx)
        total = float(mass.sum())
        if total > 0.0:
            distribution = mass / total
        else:
            # 가중치 0 리프는 부모 분포를 물려받음
            distribution = parent_distribution if parent_distribution is not None else np.full(self.k, 1.0 / self.k)

        leaf = Leaf(distribution, total)
        if self.d is not None and depth >= self.d:
            return leaf

        eff = idx[self.w[idx] >= MIN_SPLIT_WEIGHT]
        if eff.size < 2:
            return leaf

        eff_mass = self._class_mass(eff)
        eff_total = float(eff_mass.sum())
        parent_impurity = gini(eff_mass)
        if parent_impurity <= TIE_TOLERANCE:
            return leaf

        split = self._best_split(eff, eff_mass, eff_total)
        if split is None:
            return leaf
        feature, threshold, score = split
        if parent_impurity - score <= TIE_TOLERANCE:
            return leaf

        go_left = self.X[idx, feature] <= threshold
        left = self.build(idx[go_left], depth + 1, distribution)
        right = self.build(idx[~go_left], depth + 1, distribution)
        return Internal(
            feature_index=int(feature),
            threshold=float(threshold),
            left=left,
            right=right,
            weight=eff_total,
            impurity=parent_impurity,
            impurity_decrease=eff_total * (parent_impurity - score),
        )

    def _candidate_features(self) -> Tuple[np.ndarray, int]:
        p = self.X.shape[1]
        if self.max_features is None or self.max_features >= p:
            return np.arange(p), p
        return self.rng.permutation(p), self.max_features

    def _best_split(self, eff: np.ndarray, eff_mass: np.ndarray, eff_total: float):
        """(feature, threshold, 가중 자식 Gini) 또는 None"""
        m = eff.size
        onehot = np.zeros((m, self.k), dtype=np.float64)
        onehot[np.arange(m), self.y[eff]] = self.w[eff]

        features, n_required = self._candidate_features()
        best = None
        searched = 0
        for f in features:
            # 무작위 특성 부분집합에서 유효한 분할이 없으면 남은 특성으로 계속 탐색
            if searched >= n_required and best is not None:
                break
            searched += 1
            candidate = _scan_feature(self.X[eff, f], onehot, eff_mass, eff_total)
            if candidate is None:
                continue
            threshold, score = candidate
            # 특성은 오름차순으로 보므로 동점이면 먼저 본 (낮은 인덱스) 특성이 남음
            if best is None or score < best[2] - TIE_TOLERANCE:
                best = (int(f), threshold, score)
        return best


def _scan_feature(values: np.ndarray, onehot: np.ndarray, total_mass: np.ndarray, total: float):
    """
    한 특성의 모든 중간값 임계값을 한 번에 평가합니다.

    Returns:
        (threshold, 가중 자식 Gini) 또는 None (서로 다른 값이 하나뿐인 경우)
    """
    order = np.argsort(values, kind='mergesort')
    v = values[order]
    distinct = v[1:] > v[:-1]
    if not distinct.any():
        return None

    left = np.cumsum(onehot[order], axis=0)[:-1]
    right = total_mass - left
    w_left = left.sum(axis=1)
    w_right = right.sum(axis=1)

    with np.errstate(divide='ignore', invalid='ignore'):
        score = (total - (left * left).sum(axis=1) / w_left - (right * right).sum(axis=1) / w_right) / total
    score = np.where(distinct, score, np.inf)

    best_score = float(score.min())
    # 허용 오차 안의 동점은 가장 낮은 임계값
    pos = int(np.flatnonzero(score <= best_score + TIE_TOLERANCE)[0])
    threshold = 0.5 * (v[pos] + v[pos + 1])
    if threshold >= v[pos + 1]:
        threshold = float(v[pos])
    return float(threshold), float(score[pos])


# ==========================================
# 예측
# ==========================================

def _check_width(t: DecisionTree, width: int) -> None:
    if width != t.n_features:
        raise WidthMismatch(t.n_features, width)


def _reach_leaf(t: DecisionTree, x: np.ndarray) -> Leaf:
    node = t.root
    while isinstance(node, Internal):
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node


def predict_proba(t: DecisionTree, x: Sequence[float]) -> np.ndarray:
    """한 점이 도달한 리프의 클래스 분포 (합 = 1)"""
    x = np.asarray(x, dtype=np.float64)
    _check_width(t, x.shape[-1])
    return _reach_leaf(t, x).distribution.copy()


def predict_class(t: DecisionTree, x: Sequence[float]) -> int:
    """한 점이 도달한 리프의 다수 클래스"""
    x = np.asarray(x, dtype=np.float64)
    _check_width(t, x.shape[-1])
    return _reach_leaf(t, x).majority_class


def predict_proba_batch(t: DecisionTree, X: np.ndarray) -> np.ndarray:
    """n×p 입력 전체에 대한 n×k 확률 행렬"""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X는 2차원 행렬이어야 합니다")
    _check_width(t, X.shape[1])
    out = np.empty((X.shape[0], t.n_classes), dtype=np.float64)
    _route(t.root, X, np.arange(X.shape[0]), out, proba=True)
    return out


def predict_class_batch(t: DecisionTree, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X는 2차원 행렬이어야 합니다")
    _check_width(t, X.shape[1])
    out = np.empty(X.shape[0], dtype=np.intp)
    _route(t.root, X, np.arange(X.shape[0]), out, proba=False)
    return out


def _route(node: TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray, proba: bool) -> None:
    if idx.size == 0:
        return
    if isinstance(node, Leaf):
        out[idx] = node.distribution if proba else node.majority_class
        return
    go_left = X[idx, node.feature_index] <= node.threshold
    _route(node.left, X, idx[go_left], out, proba)
    _route(node.right, X, idx[~go_left], out, proba)


# ==========================================
# 해석 도구
# ==========================================

def feature_importances(t: DecisionTree) -> np.ndarray:
    """특성별 가중 Gini 감소량 합계 (정규화하지 않음)"""
    importances = np.zeros(t.n_features, dtype=np.float64)
    stack: List[TreeNode] = [t.root]
    while stack:
        node = stack.pop()
        if isinstance(node, Internal):
            importances[node.feature_index] += node.impurity_decrease
            stack.extend([node.left, node.right])
    return importances


def _feature_label(index: int, feature_names: Optional[Sequence[str]]) -> str:
    if feature_names is not None and index < len(feature_names):
        return str(feature_names[index])
    return f"x[{index}]"


def decision_path(
    t: DecisionTree,
    x: Sequence[float],
    feature_names: Optional[Sequence[str]] = None,
) -> Tuple[List[str], int]:
    """
    한 점이 리프까지 내려가며 거친 조건 목록과 예측 클래스를 돌려줍니다.

    Returns:
        (["petal_width <= 0.8", ...], 예측 클래스 인덱스)
    """
    x = np.asarray(x, dtype=np.float64)
    _check_width(t, x.shape[-1])
    steps: List[str] = []
    node = t.root
    while isinstance(node, Internal):
        name = _feature_label(node.feature_index, feature_names)
        if x[node.feature_index] <= node.threshold:
            steps.append(f"{name} <= {node.threshold:.6g}")
            node = node.left
        else:
            steps.append(f"{name} > {node.threshold:.6g}")
            node = node.right
    return steps, node.majority_class


def export_text(
    t: DecisionTree,
    feature_names: Optional[Sequence[str]] = None,
    class_names: Optional[Sequence[str]] = None,
) -> str:
    """트리를 들여쓰기된 if/else 규칙 텍스트로 출력합니다."""
    lines: List[str] = []

    def class_label(c: int) -> str:
        return str(class_names[c]) if class_names is not None else str(c)

    def walk(node: TreeNode, indent: int) -> None:
        pad = '|   ' * indent
        if isinstance(node, Leaf):
            probs = ', '.join(f"{p:.3f}" for p in node.distribution)
            lines.append(f"{pad}class: {class_label(node.majority_class)}  [{probs}]")
            return
        name = _feature_label(node.feature_index, feature_names)
        lines.append(f"{pad}{name} <= {node.threshold:.6g}")
        walk(node.left, indent + 1)
        lines.append(f"{pad}{name} >  {node.threshold:.6g}")
        walk(node.right, indent + 1)

    walk(t.root, 0)
    return '\n'.join(lines) + '\n'
