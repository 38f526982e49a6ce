"""
MoDT Core - 선형 게이팅 함수
게이팅 파라미터 θ, softmax 게이팅 값, 전체(full)/2D 게이트, 2D용 특성 선택,
가우시안 혼합 모델(BIC) 기반 전문가 수 추정.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .data import append_bias
from .errors import BadFeatureIndex, BadManualPair, InvalidConfig, NonFiniteInput, TooFewFeatures
from .tree import feature_importances, fit_tree

logger = logging.getLogger('MoDT.gating')

FULL = 'full'
TWO_D = '2d'

SELECTION_METHODS = ('tree_importance', 'linear_importance', 'pca')
DEFAULT_SELECTION = 'tree_importance'

# 특성 선택용 트리 깊이
IMPORTANCE_TREE_DEPTH = 5


# ==========================================
# 게이트 모드 / 모델
# ==========================================

@dataclass(frozen=True)
class GateMode:
    """full: 모든 p개 특성 + bias, 2d: 선택된 두 특성 + bias"""

    kind: str
    features: Optional[Tuple[int, int]] = None

    @classmethod
    def full(cls) -> 'GateMode':
        return cls(FULL)

    @classmethod
    def two_d(cls, i: int, j: int) -> 'GateMode':
        return cls(TWO_D, (int(i), int(j)))

    @property
    def is_two_d(self) -> bool:
        return self.kind == TWO_D

    def gate_width(self, p: int) -> int:
        """bias를 제외한 게이트 입력 폭 q"""
        return 2 if self.is_two_d else p

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'features': list(self.features) if self.features else None}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GateMode':
        if data['kind'] == TWO_D:
            i, j = data['features']
            return cls.two_d(i, j)
        if data['kind'] == FULL:
            return cls.full()
        raise ValueError(f"알 수 없는 게이트 모드: {data['kind']!r}")


@dataclass(frozen=True, eq=False)
class GatingModel:
    """
    학습된 게이팅 함수

    Attributes:
        theta (np.ndarray): (q+1)×e 파라미터 행렬 (마지막 행이 bias)
        mode (GateMode): full 또는 2d(i, j)
    """

    theta: np.ndarray
    mode: GateMode

    @property
    def e(self) -> int:
        return int(self.theta.shape[1])

    def values(self, X: np.ndarray) -> np.ndarray:
        """원본 특성 행렬 X에 대한 게이팅 값 G"""
        return gating_values(gate_input(X, self.mode), self.theta)

    def select(self, X: np.ndarray) -> np.ndarray:
        """점마다 게이팅 값이 가장 큰 전문가 인덱스"""
        return select_experts(self.values(X))


# ==========================================
# 게이팅 연산
# ==========================================

def gate_input(X: np.ndarray, mode: GateMode) -> np.ndarray:
    """
    게이트 입력 행렬 Xg를 만듭니다.
    full → [X, 1], 2d(i, j) → [X[:, i], X[:, j], 1]
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if not mode.is_two_d:
        return append_bias(X)

    i, j = mode.features
    p = X.shape[1]
    if i == j:
        raise BadFeatureIndex(f"2D 게이트의 두 특성이 같습니다: ({i}, {j})")
    if not (0 <= i < p and 0 <= j < p):
        raise BadFeatureIndex(f"2D 게이트 특성 인덱스 ({i}, {j})가 범위 [0, {p})를 벗어났습니다")
    return append_bias(X[:, [i, j]])


def gating_logits(Xg: np.ndarray, theta: np.ndarray) -> np.ndarray:
    Xg = np.asarray(Xg, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if Xg.ndim != 2 or theta.ndim != 2 or Xg.shape[1] != theta.shape[0]:
        raise ValueError(f"모양 불일치: Xg {Xg.shape}, theta {theta.shape}")
    if not (np.all(np.isfinite(Xg)) and np.all(np.isfinite(theta))):
        raise NonFiniteInput("게이트 입력 또는 θ에 NaN/inf가 있습니다")
    logits = Xg @ theta
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInput("Xg·θ가 유한하지 않습니다 (오버플로)")
    return logits


def gating_values(Xg: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    softmax 게이팅 값: A = exp(Xg·θ - rowmax(Xg·θ)), G = A를 행별 정규화

    행 최대값을 빼므로 |Xg·θ|가 1e6 수준이어도 오버플로하지 않습니다.

    Returns:
        np.ndarray: n×e, 각 행의 합이 1
    """
    logits = gating_logits(Xg, theta)
    A = np.exp(logits - logits.max(axis=1, keepdims=True))
    return A / A.sum(axis=1, keepdims=True)


def select_expert(gvalues_row: Sequence[float]) -> int:
    """가장 큰 게이팅 값의 전문가 (동점이면 낮은 인덱스)"""
    return int(np.argmax(np.asarray(gvalues_row, dtype=np.float64)))


def select_experts(G: np.ndarray) -> np.ndarray:
    return np.argmax(np.asarray(G, dtype=np.float64), axis=1).astype(np.intp)


def init_theta(q: int, e: int, seed: int) -> np.ndarray:
    """θ를 [-1, 1] 균등분포로 초기화 ((q+1)×e, seed마다 결정적)"""
    if e < 1:
        raise InvalidConfig(f"전문가 수 e는 1 이상이어야 합니다: {e}")
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(q + 1, e))


# ==========================================
# 2D 게이트 특성 선택
# ==========================================

def _standardize(X: np.ndarray) -> np.ndarray:
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return (X - X.mean(axis=0)) / std


def _top_two(scores: np.ndarray) -> Tuple[int, int]:
    # 동점이면 낮은 인덱스 우선 (stable 정렬)
    order = np.argsort(-scores, kind='mergesort')
    return int(order[0]), int(order[1])


def feature_ranking(X: np.ndarray, y: np.ndarray, method: str) -> np.ndarray:
    """
    특성 중요도 점수 (클수록 중요)

    Args:
        method: 'tree_importance' | 'linear_importance' | 'pca'
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    n, p = X.shape

    if method == 'tree_importance':
        k = int(y.max()) + 1
        tree = fit_tree(X, y, np.ones(n), IMPORTANCE_TREE_DEPTH, k)
        return feature_importances(tree)

    if method == 'linear_importance':
        k = int(y.max()) + 1
        Y = np.zeros((n, k), dtype=np.float64)
        Y[np.arange(n), y] = 1.0
        Z = append_bias(_standardize(X))
        coef, *_ = scipy.linalg.lstsq(Z, Y)
        return np.abs(coef[:-1]).sum(axis=1)

    if method == 'pca':
        Z = _standardize(X)
        _, _, vt = scipy.linalg.svd(Z, full_matrices=False)
        return np.abs(vt[0])

    raise InvalidConfig(f"알 수 없는 특성 선택 방법: {method!r} (가능: {', '.join(SELECTION_METHODS)}, manual)")


def select_gating_features(
    X: np.ndarray,
    y: np.ndarray,
    method: str = DEFAULT_SELECTION,
    pair: Optional[Tuple[int, int]] = None,
) -> Tuple[int, int]:
    """
    2D 게이트에 사용할 두 특성을 고릅니다.

    Args:
        X, y: 학습 데이터
        method: 'tree_importance' | 'linear_importance' | 'pca' | 'manual'
        pair: manual일 때 사용자가 지정한 (i, j)

    Returns:
        (i, j): 중요도 순서의 두 특성 인덱스 (p=2이면 항상 (0, 1))
    """
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    if p < 2:
        raise TooFewFeatures(f"2D 게이트에는 특성이 2개 이상 필요합니다 (p={p})")

    if method == 'manual':
        if pair is None:
            raise BadManualPair("manual 선택에는 (i, j) 쌍이 필요합니다")
        i, j = int(pair[0]), int(pair[1])
        if i == j or not (0 <= i < p and 0 <= j < p):
            raise BadManualPair(f"잘못된 특성 쌍 ({i}, {j}) (p={p})")
        return i, j

    if p == 2:
        return 0, 1

    i, j = _top_two(feature_ranking(X, y, method))
    logger.debug(f"🔎 {method}: 2D 게이트 특성 ({i}, {j}) 선택")
    return i, j


# ==========================================
# 전문가 수 추정 (구형 공분산 GMM + BIC)
# ==========================================

def _kmeanspp(X: np.ndarray, e: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    for _ in range(1, e):
        d2 = np.min(((X[:, None, :] - np.asarray(centers)[None]) ** 2).sum(axis=-1), axis=1)
        total = d2.sum()
        if total <= 0.0:
            centers.append(X[rng.integers(n)])
        else:
            centers.append(X[rng.choice(n, p=d2 / total)])
    return np.asarray(centers, dtype=np.float64)


def _spherical_log_prob(X, means, variances, weights) -> np.ndarray:
    p = X.shape[1]
    sq = ((X[:, None, :] - means[None]) ** 2).sum(axis=-1)
    return (
        -0.5 * (p * np.log(2.0 * np.pi * variances)[None] + sq / variances[None])
        + np.log(weights)[None]
    )


def fit_spherical_gmm(
    X: np.ndarray,
    e: int,
    rng: np.random.Generator,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> float:
    """
    구형 공분산 GMM을 EM으로 학습하고 최종 로그우도를 돌려줍니다.
    """
    n, p = X.shape
    reg = 1e-6 * max(float(X.var(axis=0).mean()), 1e-6)
    means = _kmeanspp(X, e, rng)
    variances = np.full(e, float(X.var(axis=0).mean()) + reg)
    weights = np.full(e, 1.0 / e)

    prev_ll = -np.inf
    for _ in range(max_iter):
        log_prob = _spherical_log_prob(X, means, variances, weights)
        log_norm = logsumexp(log_prob, axis=1)
        ll = float(log_norm.sum())
        if abs(ll - prev_ll) < tol * max(abs(ll), 1.0):
            break
        prev_ll = ll

        resp = np.exp(log_prob - log_norm[:, None])
        nk = resp.sum(axis=0) + 10 * np.finfo(np.float64).eps
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        sq = ((X[:, None, :] - means[None]) ** 2).sum(axis=-1)
        variances = (resp * sq).sum(axis=0) / (nk * p) + reg

    return float(logsumexp(_spherical_log_prob(X, means, variances, weights), axis=1).sum())


def gmm_bic_curve(X: np.ndarray, e_max: int, seed: int = 0, n_init: int = 3) -> List[float]:
    """e = 1..e_max 각각의 BIC (작을수록 좋음, 실패하면 inf)"""
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    rng = np.random.default_rng(seed)
    bics: List[float] = []
    for e in range(1, e_max + 1):
        best_ll = -np.inf
        for _ in range(n_init if e > 1 else 1):
            try:
                best_ll = max(best_ll, fit_spherical_gmm(X, e, rng))
            except (FloatingPointError, ValueError) as exc:
                logger.debug(f"⚠️ GMM e={e} 실패: {exc}")
        n_params = (e - 1) + e * p + e
        bic = -2.0 * best_ll + n_params * np.log(n)
        bics.append(float(bic) if np.isfinite(bic) else float('inf'))
    return bics


def estimate_expert_count(X: np.ndarray, e_max: int, seed: int = 0) -> int:
    """
    BIC가 최소인 혼합 성분 수를 전문가 수 e로 추정합니다.

    Args:
        X: 특성 행렬 (n > e_max 권장)
        e_max: 탐색할 최대 전문가 수

    Returns:
        int: 추정된 e (데이터가 퇴화된 경우 1)
    """
    if e_max < 1:
        raise InvalidConfig(f"e_max는 1 이상이어야 합니다: {e_max}")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if e_max == 1 or n < 2:
        return 1
    if n <= e_max:
        logger.warning(f"⚠️ n={n} ≤ e_max={e_max} → e_max를 {n - 1}로 줄입니다")
        e_max = n - 1

    bics = gmm_bic_curve(X, e_max, seed)
    if not np.isfinite(bics).any():
        return 1
    best = int(np.argmin(bics)) + 1
    logger.info(f"📊 GMM BIC 기반 전문가 수 추정: e={best}")
    return best
