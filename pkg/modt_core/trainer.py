"""
MoDT Core - EM 학습 루프
E-step: 게이팅 값을 가중치로 전문가 트리를 학습하고 기대값 E를 계산
M-step: E - G를 목표로 최소제곱 회귀 후 θ ← θ + γ·β
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import scipy.linalg

from .data import Dataset
from .errors import DegenerateExpert, InvalidConfig, NonFiniteInput
from .gating import (
    DEFAULT_SELECTION,
    FULL,
    SELECTION_METHODS,
    TWO_D,
    GateMode,
    GatingModel,
    gate_input,
    gating_values,
    init_theta,
    select_experts,
    select_gating_features,
)
from .predict import MoDTModel
from .tree import DecisionTree, fit_tree, predict_class_batch, predict_proba_batch

logger = logging.getLogger('MoDT.trainer')

BEST_TRAINING_ACCURACY = 'best_training_accuracy'
LAST_ITERATION = 'last_iteration'
MODEL_SELECTIONS = (BEST_TRAINING_ACCURACY, LAST_ITERATION)

RIDGE = 1e-8
ZERO_ROW_MASS = 1e-12
# 전문가 질량이 n의 이 비율보다 작으면 θ 열을 다시 뽑음
DEAD_EXPERT_FRACTION = 1e-9
MAX_REVIVE_ATTEMPTS = 3


# ==========================================
# 설정 / trace
# ==========================================

@dataclass(frozen=True)
class TrainConfig:
    """
    MoDT 학습 하이퍼파라미터

    Attributes:
        e: 전문가 수
        d: 트리 최대 깊이
        gate: '2d' 또는 'full'
        gamma: 학습률 (> 0)
        iterations: 최대 EM 반복 수
        seed: θ 초기화 seed
        model_selection: 'best_training_accuracy' | 'last_iteration'
        selection: 2D 게이트 특성 선택 방법
        features: 2D 게이트 특성 쌍을 직접 지정 (manual)
        tol: max|Δθ|가 이보다 작으면 조기 종료 (0이면 끔)
        threads: E-step 트리 병렬 학습 워커 수
    """

    e: int = 3
    d: int = 2
    gate: str = TWO_D
    gamma: float = 3.0
    iterations: int = 40
    seed: int = 0
    model_selection: str = BEST_TRAINING_ACCURACY
    selection: str = DEFAULT_SELECTION
    features: Optional[Tuple[int, int]] = None
    tol: float = 1e-6
    threads: int = 1

    def validate(self) -> 'TrainConfig':
        if self.e < 1:
            raise InvalidConfig(f"experts는 1 이상이어야 합니다: {self.e}")
        if self.d < 1:
            raise InvalidConfig(f"depth는 1 이상이어야 합니다: {self.d}")
        if self.gate not in (TWO_D, FULL):
            raise InvalidConfig(f"gate는 '2d' 또는 'full'이어야 합니다: {self.gate!r}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise InvalidConfig(f"gamma는 양수여야 합니다: {self.gamma}")
        if self.iterations < 1:
            raise InvalidConfig(f"iterations는 1 이상이어야 합니다: {self.iterations}")
        if self.model_selection not in MODEL_SELECTIONS:
            raise InvalidConfig(f"알 수 없는 model_selection: {self.model_selection!r}")
        if self.selection not in SELECTION_METHODS:
            raise InvalidConfig(f"알 수 없는 selection: {self.selection!r}")
        if self.tol < 0:
            raise InvalidConfig(f"tol은 음수일 수 없습니다: {self.tol}")
        if self.threads < 1:
            raise InvalidConfig(f"threads는 1 이상이어야 합니다: {self.threads}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['features'] = list(self.features) if self.features is not None else None
        # 워커 수는 결과에 영향이 없으므로 모델 파일에 남기지 않음
        data.pop('threads')
        return data


@dataclass(frozen=True, eq=False)
class IterationRecord:
    iteration: int
    training_accuracy: float
    theta: np.ndarray
    expert_mass: np.ndarray


@dataclass
class TrainingTrace:
    """반복별 (학습 정확도, θ 스냅샷, 전문가별 질량) 기록"""

    records: List[IterationRecord] = field(default_factory=list)
    selected_iteration: Optional[int] = None

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    @property
    def accuracies(self) -> List[float]:
        return [r.training_accuracy for r in self.records]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for r in self.records:
            row = {'iteration': r.iteration, 'training_accuracy': r.training_accuracy}
            for j, m in enumerate(r.expert_mass):
                row[f'mass_{j}'] = float(m)
            rows.append(row)
        return pd.DataFrame(rows)

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.10g')


# ==========================================
# E-step
# ==========================================

def _fit_experts(
    X: np.ndarray,
    y: np.ndarray,
    G: np.ndarray,
    d: int,
    k: int,
    threads: int = 1,
) -> List[DecisionTree]:
    def fit_one(j: int) -> DecisionTree:
        return fit_tree(X, y, G[:, j], d, k)

    if threads <= 1 or G.shape[1] == 1:
        return [fit_one(j) for j in range(G.shape[1])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fit_one, range(G.shape[1])))


def confidence_matrix(trees: List[DecisionTree], X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """C[i, j] = 트리 j가 점 i의 정답 클래스에 주는 확률"""
    y = np.asarray(y, dtype=np.intp)
    rows = np.arange(y.shape[0])
    C = np.empty((y.shape[0], len(trees)), dtype=np.float64)
    for j, tree in enumerate(trees):
        C[:, j] = predict_proba_batch(tree, X)[rows, y]
    return C


def expectation(G: np.ndarray, C: np.ndarray) -> np.ndarray:
    """
    E = rownormalize(G ∘ C)

    G ∘ C 행의 합이 1e-12 미만이면 그 행은 G를 그대로 씁니다.
    """
    G = np.asarray(G, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if G.shape != C.shape:
        raise ValueError(f"모양 불일치: G {G.shape}, C {C.shape}")

    B = G * C
    totals = B.sum(axis=1)
    zero = totals < ZERO_ROW_MASS
    E = np.empty_like(B)
    E[~zero] = B[~zero] / totals[~zero, None]
    if zero.any():
        logger.warning(f"⚠️ 기대값 행 {int(zero.sum())}개가 0 → 게이팅 값으로 대체")
        E[zero] = G[zero]
    return E


def e_step(
    Xg: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    theta: np.ndarray,
    d: int,
    k: int,
    threads: int = 1,
) -> Tuple[List[DecisionTree], np.ndarray, np.ndarray]:
    """
    Returns:
        (trees, G, E)

    Raises:
        DegenerateExpert: G의 한 열 질량 합이 1e-9 미만일 때
    """
    G = gating_values(Xg, theta)
    mass = G.sum(axis=0)
    for j, m in enumerate(mass):
        if m < 1e-9:
            raise DegenerateExpert(j, float(m))
    trees = _fit_experts(X, y, G, d, k, threads)
    C = confidence_matrix(trees, X, y)
    return trees, G, expectation(G, C)


# ==========================================
# M-step
# ==========================================

def least_squares(Xg: np.ndarray, T: np.ndarray, ridge: float = RIDGE) -> np.ndarray:
    """
    (XgᵀXg + λI)β = XgᵀT 를 풀어 RSS를 최소화하는 β를 구합니다.

    Args:
        Xg: n×(q+1) 게이트 입력
        T: n×e 목표
        ridge: 계수 λ (랭크 부족 대비)

    Returns:
        np.ndarray: (q+1)×e
    """
    Xg = np.asarray(Xg, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if not (np.all(np.isfinite(Xg)) and np.all(np.isfinite(T))):
        raise NonFiniteInput("최소제곱 입력에 NaN/inf가 있습니다")
    A = Xg.T @ Xg + ridge * np.eye(Xg.shape[1])
    return scipy.linalg.solve(A, Xg.T @ T, assume_a='pos')


def m_step(
    Xg: np.ndarray,
    E: np.ndarray,
    G: np.ndarray,
    theta: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """θ_new = θ + γ·β,  β = least_squares(Xg, E - G)"""
    beta = least_squares(Xg, np.asarray(E) - np.asarray(G))
    return np.asarray(theta, dtype=np.float64) + gamma * beta


# ==========================================
# 학습 루프
# ==========================================

def resolve_gate_mode(dataset: Dataset, config: TrainConfig) -> GateMode:
    if config.gate == FULL:
        return GateMode.full()
    if config.features is not None:
        i, j = select_gating_features(dataset.X, dataset.y, 'manual', config.features)
    else:
        i, j = select_gating_features(dataset.X, dataset.y, config.selection)
    return GateMode.two_d(i, j)


def _revive_dead_experts(Xg: np.ndarray, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = Xg.shape[0]
    mass = gating_values(Xg, theta).sum(axis=0)
    dead = np.flatnonzero(mass < DEAD_EXPERT_FRACTION * n)
    if dead.size == 0:
        return theta
    theta = theta.copy()
    for j in dead:
        logger.warning(f"⚠️ expert {j} 질량 {mass[j]:.3g} → θ 열 재초기화")
        theta[:, j] = rng.uniform(-1.0, 1.0, size=theta.shape[0])
    return theta


def _hard_gate_accuracy(trees: List[DecisionTree], G: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    experts = select_experts(G)
    pred = np.zeros(y.shape[0], dtype=np.intp)
    for j, tree in enumerate(trees):
        mask = experts == j
        if mask.any():
            pred[mask] = predict_class_batch(tree, X[mask])
    return float(np.mean(pred == y))


def _run_e_step(Xg, X, y, theta, config, k, threads, rng):
    for attempt in range(MAX_REVIVE_ATTEMPTS + 1):
        theta = _revive_dead_experts(Xg, theta, rng)
        try:
            return theta, e_step(Xg, X, y, theta, config.d, k, threads)
        except DegenerateExpert as exc:
            if attempt == MAX_REVIVE_ATTEMPTS:
                raise
            logger.warning(f"⚠️ {exc} → 재시도")
    raise AssertionError('unreachable')


def train(
    dataset: Dataset,
    config: TrainConfig,
    threads: Optional[int] = None,
) -> Tuple[MoDTModel, TrainingTrace]:
    """
    EM으로 MoDT를 학습합니다.

    Args:
        dataset: 학습 데이터
        config: 하이퍼파라미터 (검증됨)
        threads: E-step 워커 수 (None이면 config.threads)

    Returns:
        (model, trace): 선택된 θ로 트리를 다시 학습한 모델과 반복 기록
    """
    config = config.validate()
    threads = config.threads if threads is None else threads
    X, y, k = dataset.X, dataset.y, dataset.n_classes
    n = dataset.n_samples

    mode = resolve_gate_mode(dataset, config)
    Xg = gate_input(X, mode)
    theta = init_theta(mode.gate_width(dataset.n_features), config.e, config.seed)
    revive_rng = np.random.default_rng((config.seed, 1))

    logger.info(
        f"🚀 MoDT 학습 시작 (n={n}, e={config.e}, d={config.d}, gate={mode.kind}"
        f"{'' if mode.features is None else ' ' + str(mode.features)}, γ={config.gamma})"
    )

    trace = TrainingTrace()
    for it in range(1, config.iterations + 1):
        theta, (trees, G, E) = _run_e_step(Xg, X, y, theta, config, k, threads, revive_rng)
        acc = _hard_gate_accuracy(trees, G, X, y)
        mass = G.sum(axis=0)
        trace.append(IterationRecord(it, acc, theta.copy(), mass))
        logger.info(f"iter {it:3d} | acc={acc:.4f} | mass=[{', '.join(f'{m:.1f}' for m in mass)}]")

        new_theta = m_step(Xg, E, G, theta, config.gamma)
        delta = float(np.max(np.abs(new_theta - theta)))
        theta = new_theta
        if delta < config.tol:
            logger.info(f"✅ max|Δθ|={delta:.2e} < tol → {it}회에서 조기 종료")
            break

    if config.model_selection == BEST_TRAINING_ACCURACY:
        # argmax는 동점이면 가장 이른 반복을 고름
        best = int(np.argmax(trace.accuracies))
        selected_theta = trace.records[best].theta
        trace.selected_iteration = trace.records[best].iteration
    else:
        selected_theta = _revive_dead_experts(Xg, theta, revive_rng)
        trace.selected_iteration = len(trace)

    final_G = gating_values(Xg, selected_theta)
    trees = _fit_experts(X, y, final_G, config.d, k, threads)
    final_acc = _hard_gate_accuracy(trees, final_G, X, y)

    model = MoDTModel(
        gating=GatingModel(theta=selected_theta.copy(), mode=mode),
        trees=trees,
        class_names=list(dataset.class_names),
        feature_names=list(dataset.feature_names),
        encoding=dataset.encoding,
        train_meta={
            'config': config.to_dict(),
            'iterations_run': len(trace),
            'selected_iteration': trace.selected_iteration,
            'training_accuracy': final_acc,
            'n_samples': n,
        },
    )
    logger.info(f"📊 학습 완료: iteration {trace.selected_iteration} 선택, 학습 정확도 {final_acc:.4f}")
    return model, trace
