"""
MoDT Core - 랜덤 하이퍼파라미터 탐색 / 벤치마크
학습 데이터에서 여러 trial을 돌려 상위 k개 설정을 고르고,
각 설정을 다시 학습해 held-out 테스트 데이터에서 반복 평가합니다.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .data import Dataset, train_test_split
from .errors import InvalidConfig, ModtError, TrainingError
from .forest import fit_random_forest, rf_predict
from .gating import DEFAULT_SELECTION, FULL, SELECTION_METHODS, TWO_D
from .predict import evaluate, model_complexity
from .trainer import MODEL_SELECTIONS, TrainConfig, train
from .tree import fit_tree, predict_class_batch

logger = logging.getLogger('MoDT.search')

VALIDATION_FRACTION = 0.2

MODT_2D = 'MoDT-2D'
MODT_FG = 'MoDT-FG'
RF_FULL = 'RF'


# ==========================================
# 탐색 공간
# ==========================================

@dataclass(frozen=True)
class SearchSpace:
    """
    Attributes:
        e, d, gate: 고정값
        gamma_range: log-uniform 범위
        iterations_range: 정수 균등 범위 (양끝 포함)
        seed_range: θ 초기화 seed 범위 (양끝 포함)
        model_selections: 후보 model_selection 정책
        selections: 2D 게이트 특성 선택 방법 후보 (full 게이트에서는 무시)
    """

    e: int = 3
    d: int = 2
    gate: str = TWO_D
    gamma_range: Tuple[float, float] = (1e-2, 1e1)
    iterations_range: Tuple[int, int] = (10, 100)
    seed_range: Tuple[int, int] = (0, 9999)
    model_selections: Tuple[str, ...] = MODEL_SELECTIONS
    selections: Tuple[str, ...] = SELECTION_METHODS

    def validate(self) -> 'SearchSpace':
        lo, hi = self.gamma_range
        if not 0 < lo <= hi:
            raise InvalidConfig(f"gamma 범위가 올바르지 않습니다: {self.gamma_range}")
        for name, (lo, hi) in (('iterations', self.iterations_range), ('seed', self.seed_range)):
            if lo > hi:
                raise InvalidConfig(f"{name} 범위가 비어 있습니다: ({lo}, {hi})")
        if self.iterations_range[0] < 1:
            raise InvalidConfig("iterations 범위는 1 이상이어야 합니다")
        if not self.model_selections or not self.selections:
            raise InvalidConfig("후보 목록이 비어 있습니다")
        return self

    def sample(self, rng: np.random.Generator) -> TrainConfig:
        log_lo, log_hi = math.log(self.gamma_range[0]), math.log(self.gamma_range[1])
        selections = self.selections if self.gate == TWO_D else (DEFAULT_SELECTION,)
        return TrainConfig(
            e=self.e,
            d=self.d,
            gate=self.gate,
            gamma=float(math.exp(rng.uniform(log_lo, log_hi))),
            iterations=int(rng.integers(self.iterations_range[0], self.iterations_range[1] + 1)),
            seed=int(rng.integers(self.seed_range[0], self.seed_range[1] + 1)),
            model_selection=str(self.model_selections[rng.integers(len(self.model_selections))]),
            selection=str(selections[rng.integers(len(selections))]),
        )

    def contains(self, config: TrainConfig) -> bool:
        eps = 1e-12 * max(1.0, self.gamma_range[1])
        return (
            config.e == self.e
            and config.d == self.d
            and config.gate == self.gate
            and self.gamma_range[0] - eps <= config.gamma <= self.gamma_range[1] + eps
            and self.iterations_range[0] <= config.iterations <= self.iterations_range[1]
            and self.seed_range[0] <= config.seed <= self.seed_range[1]
            and config.model_selection in self.model_selections
            and (self.gate != TWO_D or config.selection in self.selections)
        )


@dataclass(frozen=True)
class TrialResult:
    config: TrainConfig
    score: Optional[float]
    trial_index: int
    rank: Optional[int] = None
    error: Optional[str] = None


# ==========================================
# 랜덤 탐색
# ==========================================

def sample_configs(space: SearchSpace, n_trials: int, seed: int) -> List[TrainConfig]:
    rng = np.random.default_rng(seed)
    return [space.sample(rng) for _ in range(n_trials)]


def _score_trial(index: int, config: TrainConfig, fit_set: Dataset, val_set: Dataset) -> TrialResult:
    try:
        model, _ = train(fit_set, config, threads=1)
        return TrialResult(config=config, score=evaluate(model, val_set), trial_index=index)
    except (ModtError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.warning(f"⚠️ trial {index} 실패 ({type(e).__name__}: {e}) → 건너뜀")
        return TrialResult(config=config, score=None, trial_index=index, error=f"{type(e).__name__}: {e}")


def run_trials(
    train_set: Dataset,
    space: SearchSpace,
    n_trials: int,
    seed: int,
    threads: int = 1,
) -> List[TrialResult]:
    """
    n_trials개의 설정을 뽑아 학습 데이터의 80/20 내부 분할로 각각 점수를 매깁니다.

    Returns:
        List[TrialResult]: trial 순서대로 (실패한 trial은 score=None)
    """
    space.validate()
    configs = sample_configs(space, n_trials, seed)
    fit_set, val_set = train_test_split(train_set, VALIDATION_FRACTION, seed)

    if threads <= 1:
        return [_score_trial(i, c, fit_set, val_set) for i, c in enumerate(configs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda args: _score_trial(args[0], args[1], fit_set, val_set), enumerate(configs)))


def rank_trials(trials: Sequence[TrialResult], k_best: int) -> List[TrialResult]:
    """점수 내림차순, 동점이면 먼저 실행한 trial 우선"""
    scored = [t for t in trials if t.score is not None]
    scored.sort(key=lambda t: (-t.score, t.trial_index))
    return [replace(t, rank=r) for r, t in enumerate(scored[:k_best], start=1)]


def trials_to_frame(trials: Sequence[TrialResult]) -> pd.DataFrame:
    return pd.DataFrame([
        {
            'trial': t.trial_index,
            'gamma': t.config.gamma,
            'iterations': t.config.iterations,
            'seed': t.config.seed,
            'model_selection': t.config.model_selection,
            'selection': t.config.selection if t.config.gate == TWO_D else '',
            'score': t.score,
            'error': t.error or '',
        }
        for t in trials
    ])


def random_search(
    train_set: Dataset,
    space: SearchSpace,
    n_trials: int,
    k_best: int,
    seed: int,
    threads: int = 1,
    trial_log: Optional[Union[str, Path]] = None,
) -> List[TrialResult]:
    """
    랜덤 탐색으로 상위 k개 설정을 찾습니다.

    Args:
        train_set: 탐색에 쓸 학습 데이터
        space: 탐색 공간
        n_trials: trial 수 (≥ k_best)
        k_best: 돌려줄 설정 수
        seed: 설정 샘플링 + 내부 분할 seed
        threads: 병렬 trial 수
        trial_log: 주어지면 전체 trial 기록을 CSV로 저장

    Returns:
        List[TrialResult]: rank 1..k 순서
    """
    if not n_trials >= k_best >= 1:
        raise InvalidConfig(f"n_trials({n_trials}) ≥ k_best({k_best}) ≥ 1 이어야 합니다")

    logger.info(f"🔍 랜덤 탐색 시작 ({n_trials} trials, gate={space.gate}, top {k_best})")
    trials = run_trials(train_set, space, n_trials, seed, threads)
    if trial_log is not None:
        trials_to_frame(trials).to_csv(trial_log, index=False)

    best = rank_trials(trials, k_best)
    if not best:
        raise TrainingError("모든 탐색 trial이 실패했습니다")
    logger.info(f"📊 최고 검증 정확도 {best[0].score:.4f} (trial {best[0].trial_index})")
    return best


# ==========================================
# 벤치마크
# ==========================================

@dataclass(frozen=True)
class BenchmarkProtocol:
    """
    Attributes:
        test_fraction: held-out 테스트 비율
        n_trials / k_best: 탐색 trial 수와 재평가할 상위 설정 수
        reps: 설정(또는 기준 모델)별 반복 평가 수
        seed: 분할/탐색 seed
        e, d: MoDT 고정값 (같은 예산의 "RF d=<d> e=<e>" 기준 모델에도 사용)
        dt_depths: 단일 트리 기준 모델 깊이
        rf_trees: 무제한 깊이 랜덤 포레스트의 트리 수
        methods: 실행할 방법 (기본: 전체)
        threads: 병렬 trial 수
    """

    test_fraction: float = 0.25
    n_trials: int = 100
    k_best: int = 10
    reps: int = 20
    seed: int = 0
    e: int = 3
    d: int = 2
    dt_depths: Tuple[int, ...] = (2, 3, 4)
    rf_trees: int = 100
    methods: Optional[Tuple[str, ...]] = None
    threads: int = 1
    space: SearchSpace = field(default_factory=SearchSpace)

    @property
    def small_forest_name(self) -> str:
        """MoDT와 같은 예산(트리 e개, 깊이 d)의 랜덤 포레스트"""
        return f'RF d={self.d} e={self.e}'

    def method_names(self) -> List[str]:
        names = [MODT_2D, MODT_FG] + [f'DT d={d}' for d in self.dt_depths] + [self.small_forest_name, RF_FULL]
        if self.methods is None:
            return names
        unknown = [m for m in self.methods if m not in names]
        if unknown:
            raise InvalidConfig(f"알 수 없는 벤치마크 방법: {unknown}")
        return [m for m in names if m in self.methods]


@dataclass
class _Runs:
    train_acc: List[float] = field(default_factory=list)
    test_acc: List[float] = field(default_factory=list)
    nodes: List[float] = field(default_factory=list)
    seconds: List[float] = field(default_factory=list)

    def add(self, train_acc: float, test_acc: float, nodes: int, seconds: float) -> None:
        self.train_acc.append(train_acc)
        self.test_acc.append(test_acc)
        self.nodes.append(float(nodes))
        self.seconds.append(seconds)


def _row(dataset_name: str, method: str, runs: _Runs) -> Dict[str, object]:
    def stat(values: List[float], fn) -> float:
        return float(fn(values)) if values else float('nan')

    return {
        'dataset': dataset_name,
        'method': method,
        'train_mean': stat(runs.train_acc, np.mean),
        'train_std': stat(runs.train_acc, np.std),
        'test_mean': stat(runs.test_acc, np.mean),
        'test_std': stat(runs.test_acc, np.std),
        'nodes_mean': stat(runs.nodes, np.mean),
        'train_seconds': stat(runs.seconds, np.mean),
        'runs': len(runs.test_acc),
    }


def _bench_modt(train_set: Dataset, test_set: Dataset, gate: str, protocol: BenchmarkProtocol) -> _Runs:
    runs = _Runs()
    if gate == TWO_D and train_set.n_features < 2:
        logger.warning("⚠️ 특성이 2개 미만이라 MoDT-2D를 건너뜁니다")
        return runs

    space = replace(protocol.space, e=protocol.e, d=protocol.d, gate=gate)
    best = random_search(train_set, space, protocol.n_trials, protocol.k_best, protocol.seed, protocol.threads)
    for trial in best:
        for r in range(protocol.reps):
            config = replace(trial.config, seed=trial.config.seed + r)
            started = time.perf_counter()
            try:
                model, _ = train(train_set, config)
            except (ModtError, np.linalg.LinAlgError) as e:
                logger.warning(f"⚠️ 재학습 실패 (rank {trial.rank}, rep {r}): {e}")
                continue
            seconds = time.perf_counter() - started
            runs.add(
                evaluate(model, train_set),
                evaluate(model, test_set),
                model_complexity(model)['total_nodes'],
                seconds,
            )
    return runs


def _bench_tree(dataset: Dataset, depth: int, protocol: BenchmarkProtocol) -> _Runs:
    runs = _Runs()
    for r in range(protocol.reps):
        train_set, test_set = train_test_split(dataset, protocol.test_fraction, protocol.seed + r)
        started = time.perf_counter()
        tree = fit_tree(train_set.X, train_set.y, np.ones(train_set.n_samples), depth, dataset.n_classes)
        seconds = time.perf_counter() - started
        runs.add(
            float(np.mean(predict_class_batch(tree, train_set.X) == train_set.y)),
            float(np.mean(predict_class_batch(tree, test_set.X) == test_set.y)),
            tree.node_count(),
            seconds,
        )
    return runs


def _bench_forest(dataset: Dataset, n_trees: int, depth: Optional[int], protocol: BenchmarkProtocol) -> _Runs:
    runs = _Runs()
    for r in range(protocol.reps):
        train_set, test_set = train_test_split(dataset, protocol.test_fraction, protocol.seed + r)
        started = time.perf_counter()
        forest = fit_random_forest(train_set.X, train_set.y, n_trees, depth, protocol.seed + r, k=dataset.n_classes)
        seconds = time.perf_counter() - started
        runs.add(
            float(np.mean(rf_predict(forest, train_set.X) == train_set.y)),
            float(np.mean(rf_predict(forest, test_set.X) == test_set.y)),
            forest.node_count(),
            seconds,
        )
    return runs


def benchmark(dataset: Dataset, protocol: BenchmarkProtocol, dataset_name: str = 'dataset') -> pd.DataFrame:
    """
    전체 프로토콜 실행 (75/25 분할 → 학습 데이터 탐색 → 상위 k 재학습 → 반복 테스트 평가)

    MoDT는 탐색한 분할을 고정하고 초기화 seed를 바꿔 반복하며,
    결정적인 DT/RF 기준 모델은 반복마다 분할을 새로 뽑습니다.

    Returns:
        pd.DataFrame: 방법별 한 행 (train/test 평균±표준편차, 평균 노드 수, 평균 학습 시간)
    """
    logger.info(f"🚀 벤치마크 시작: {dataset_name} (n={dataset.n_samples}, p={dataset.n_features})")
    train_set, test_set = train_test_split(dataset, protocol.test_fraction, protocol.seed)

    rows = []
    for method in protocol.method_names():
        if method == MODT_2D:
            runs = _bench_modt(train_set, test_set, TWO_D, protocol)
        elif method == MODT_FG:
            runs = _bench_modt(train_set, test_set, FULL, protocol)
        elif method == protocol.small_forest_name:
            runs = _bench_forest(dataset, protocol.e, protocol.d, protocol)
        elif method == RF_FULL:
            runs = _bench_forest(dataset, protocol.rf_trees, None, protocol)
        else:
            runs = _bench_tree(dataset, int(method.split('=')[1]), protocol)

        row = _row(dataset_name, method, runs)
        logger.info(f"📊 {dataset_name} | {method:<12} | test {row['test_mean']:.3f} ± {row['test_std']:.3f}")
        rows.append(row)
    return pd.DataFrame(rows)


# ==========================================
# 리포트 출력
# ==========================================

def _fmt(mean: float, std: float) -> str:
    if np.isnan(mean):
        return '-'
    return f"{mean:.2f} ± {std:.2f}"


def report_markdown(report: pd.DataFrame) -> str:
    """데이터셋 × 방법 표 (train / test 평균 ± 표준편차, 노드 수, 학습 시간)"""
    header = '| dataset | method | train | test | nodes | train time (s) |'
    lines = [header, '|---|---|---|---|---|---|']
    for _, r in report.iterrows():
        nodes = '-' if np.isnan(r['nodes_mean']) else f"{r['nodes_mean']:.1f}"
        seconds = '-' if np.isnan(r['train_seconds']) else f"{r['train_seconds']:.3f}"
        lines.append(
            f"| {r['dataset']} | {r['method']} | {_fmt(r['train_mean'], r['train_std'])} "
            f"| {_fmt(r['test_mean'], r['test_std'])} | {nodes} | {seconds} |"
        )
    return '\n'.join(lines) + '\n'


def write_report(report: pd.DataFrame, csv_path: Union[str, Path], markdown_path: Optional[Union[str, Path]] = None) -> None:
    report.to_csv(csv_path, index=False, float_format='%.6g')
    if markdown_path is not None:
        Path(markdown_path).write_text(report_markdown(report), encoding='utf-8')
