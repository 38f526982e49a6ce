"""
MoDT Core - 데이터 적재 및 전처리
CSV + 스키마 사이드카 적재, one-hot 인코딩, bias 컬럼 추가, train/test 분할.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from .errors import (
    BadEncoding,
    DegenerateSplit,
    EmptyFile,
    InvalidConfig,
    MalformedCsv,
    MissingColumn,
    MissingValue,
    TooFewClasses,
    UnknownLabel,
    UnparsableNumeric,
    WidthMismatch,
)

logger = logging.getLogger('MoDT.data')

NUMERIC = 'numeric'
CATEGORICAL = 'categorical'
TARGET = 'target'

PathLike = Union[str, Path]


# ==========================================
# 스키마
# ==========================================

@dataclass(frozen=True)
class ColumnSpec:
    """컬럼 하나의 선언 (categories는 categorical 컬럼에서만 사용)"""

    name: str
    kind: str
    categories: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class Schema:
    columns: Tuple[ColumnSpec, ...]
    target: str


def parse_schema(entries: Dict[str, Optional[str]]) -> Schema:
    """
    key=value 항목들을 Schema로 변환합니다.

    Args:
        entries: {컬럼명: 'numeric' | 'categorical' | 'categorical:a,b,c' | 'target'}

    Returns:
        Schema: 선언 순서를 유지한 특성 컬럼 + 타깃 컬럼명
    """
    columns: List[ColumnSpec] = []
    targets: List[str] = []

    for name, raw_kind in entries.items():
        kind = (raw_kind or '').strip()
        if kind == TARGET:
            targets.append(name)
        elif kind == NUMERIC:
            columns.append(ColumnSpec(name, NUMERIC))
        elif kind == CATEGORICAL:
            columns.append(ColumnSpec(name, CATEGORICAL))
        elif kind.startswith(CATEGORICAL + ':'):
            declared = [c.strip() for c in kind.split(':', 1)[1].split(',') if c.strip()]
            columns.append(ColumnSpec(name, CATEGORICAL, tuple(sorted(set(declared)))))
        else:
            raise InvalidConfig(f"스키마 컬럼 '{name}'의 종류를 알 수 없습니다: {raw_kind!r}")

    if len(targets) != 1:
        raise InvalidConfig(f"스키마에는 target 컬럼이 정확히 하나 있어야 합니다 (발견: {len(targets)})")
    if not columns:
        raise InvalidConfig("스키마에 특성 컬럼이 없습니다")

    return Schema(columns=tuple(columns), target=targets[0])


def load_schema(path: PathLike) -> Schema:
    """스키마 사이드카 파일(key=value)을 읽습니다."""
    if not Path(path).is_file():
        raise InvalidConfig(f"스키마 파일을 찾을 수 없습니다: {path}")
    return parse_schema(dotenv_values(path))


# ==========================================
# 데이터셋 타입
# ==========================================

@dataclass
class RawDataset:
    """
    인코딩 전 원본 데이터

    Attributes:
        frame (pd.DataFrame): 숫자 컬럼은 float, 범주형/타깃 컬럼은 str
        columns (List[ColumnSpec]): 특성 컬럼 선언 (순서 유지)
        target_column (Optional[str]): 타깃 컬럼명 (예측용 파일에서는 없을 수 있음)
    """

    frame: pd.DataFrame
    columns: List[ColumnSpec]
    target_column: Optional[str]

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def rows(self) -> List[dict]:
        return self.frame.to_dict('records')


@dataclass(frozen=True)
class FeatureEncoding:
    """학습 시점의 인코딩 레이아웃 (예측 시 같은 컬럼 배치를 재현하기 위해 모델에 저장)"""

    columns: Tuple[ColumnSpec, ...]

    @property
    def feature_names(self) -> List[str]:
        names: List[str] = []
        for col in self.columns:
            if col.kind == NUMERIC:
                names.append(col.name)
            else:
                names.extend(f"{col.name}={cat}" for cat in col.categories or ())
        return names

    @property
    def width(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> List[dict]:
        return [
            {'name': c.name, 'kind': c.kind, 'categories': list(c.categories) if c.categories is not None else None}
            for c in self.columns
        ]

    @classmethod
    def from_dict(cls, items: Sequence[dict]) -> 'FeatureEncoding':
        return cls(tuple(
            ColumnSpec(
                item['name'],
                item['kind'],
                tuple(item['categories']) if item.get('categories') is not None else None,
            )
            for item in items
        ))


@dataclass
class Dataset:
    """
    완전히 수치화된 데이터셋

    Attributes:
        X (np.ndarray): n×p 특성 행렬
        y (np.ndarray): n개의 클래스 인덱스 (0..k-1)
        class_names (List[str]): k개의 클래스 이름
        feature_names (List[str]): p개의 특성 이름
        encoding (Optional[FeatureEncoding]): 원본 컬럼 → 인코딩 컬럼 레이아웃
    """

    X: np.ndarray
    y: np.ndarray
    class_names: List[str]
    feature_names: List[str]
    encoding: Optional[FeatureEncoding] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.intp)
        if self.X.ndim != 2:
            raise ValueError("X는 2차원 행렬이어야 합니다")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X와 y의 행 수가 다릅니다")
        if self.X.shape[1] != len(self.feature_names):
            raise WidthMismatch(len(self.feature_names), self.X.shape[1])

    @property
    def n_samples(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices: np.ndarray) -> 'Dataset':
        return Dataset(
            X=self.X[indices],
            y=self.y[indices],
            class_names=list(self.class_names),
            feature_names=list(self.feature_names),
            encoding=self.encoding,
        )


# ==========================================
# CSV 적재
# ==========================================

def load_csv(path: PathLike, schema: Schema, require_target: bool = True) -> RawDataset:
    """
    헤더가 있는 CSV 파일을 스키마에 맞춰 읽습니다. 행 순서는 유지됩니다.

    Args:
        path: CSV 파일 경로 (UTF-8, 구분자 ',', 소수점 '.')
        schema: 컬럼 종류 + 타깃 컬럼명
        require_target: False면 타깃 컬럼이 없어도 허용 (예측용 입력)

    Returns:
        RawDataset
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"빈 파일입니다: {path}")
    except pd.errors.ParserError as e:
        raise MalformedCsv(f"CSV 형식 오류: {path} ({str(e).strip()})") from e
    except UnicodeDecodeError as e:
        raise BadEncoding(f"UTF-8 파일이 아닙니다: {path} (byte {e.start})") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    if frame.empty:
        raise EmptyFile(f"데이터 행이 없습니다: {path}")

    for col in schema.columns:
        if col.name not in frame.columns:
            raise MissingColumn(col.name)

    has_target = schema.target in frame.columns
    if require_target and not has_target:
        raise MissingColumn(schema.target)

    wanted = [c.name for c in schema.columns] + ([schema.target] if has_target else [])
    frame = frame[wanted].reset_index(drop=True)

    # keep_default_na=False라 짧은 행과 빈 셀은 NaN이 아니라 ''로 들어옴
    frame = frame.apply(lambda s: s.fillna('').str.strip())
    missing = (frame == '').to_numpy()
    if missing.any():
        row, col_pos = np.argwhere(missing)[0]
        raise MissingValue(int(row), wanted[col_pos])

    for col in schema.columns:
        if col.kind != NUMERIC:
            continue
        values = pd.to_numeric(frame[col.name], errors='coerce')
        bad = ~np.isfinite(values.to_numpy(dtype=np.float64))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise UnparsableNumeric(row, col.name, frame[col.name].iloc[row])
        frame[col.name] = values.astype(np.float64)

    logger.debug(f"📥 {path}: {len(frame)}행, {len(schema.columns)}개 특성 컬럼")
    return RawDataset(frame=frame, columns=list(schema.columns), target_column=schema.target if has_target else None)


# ==========================================
# 인코딩
# ==========================================

def build_encoding(raw: RawDataset) -> FeatureEncoding:
    """범주형 컬럼의 카테고리를 사전순으로 고정합니다 (선언된 카테고리가 있으면 그대로 사용)."""
    columns = []
    for col in raw.columns:
        if col.kind == CATEGORICAL and col.categories is None:
            cats = tuple(sorted(set(raw.frame[col.name].tolist())))
            columns.append(ColumnSpec(col.name, CATEGORICAL, cats))
        else:
            columns.append(col)
    return FeatureEncoding(tuple(columns))


def encode_features(raw: RawDataset, encoding: FeatureEncoding) -> np.ndarray:
    """
    원본 컬럼을 인코딩 레이아웃에 맞춰 수치 행렬로 변환합니다.
    처음 보는 카테고리는 해당 그룹 전체가 0으로 인코딩됩니다.
    """
    raw_names = [c.name for c in raw.columns]
    enc_names = [c.name for c in encoding.columns]
    if raw_names != enc_names:
        raise WidthMismatch(encoding.width, build_encoding(raw).width)

    n = raw.n_rows
    blocks: List[np.ndarray] = []
    for col in encoding.columns:
        values = raw.frame[col.name]
        if col.kind == NUMERIC:
            blocks.append(values.to_numpy(dtype=np.float64).reshape(n, 1))
            continue
        cats = list(col.categories or ())
        block = np.zeros((n, len(cats)), dtype=np.float64)
        lookup = {cat: j for j, cat in enumerate(cats)}
        codes = values.map(lookup)
        known = codes.notna().to_numpy()
        block[np.flatnonzero(known), codes[known].astype(int).to_numpy()] = 1.0
        if not known.all():
            logger.debug(f"⚠️ '{col.name}': 처음 보는 카테고리 {int((~known).sum())}건 → 0 인코딩")
        blocks.append(block)

    if not blocks:
        return np.zeros((n, 0), dtype=np.float64)
    return np.hstack(blocks)


def one_hot_encode(
    raw: RawDataset,
    encoding: Optional[FeatureEncoding] = None,
    class_names: Optional[Sequence[str]] = None,
) -> Dataset:
    """
    RawDataset → Dataset (범주형 컬럼은 카테고리 수만큼의 이진 컬럼으로 확장)

    Args:
        raw: 타깃 컬럼이 포함된 원본 데이터
        encoding: 학습 때의 레이아웃 (None이면 raw에서 새로 만듦)
        class_names: 학습 때의 클래스 목록 (None이면 사전순으로 새로 만듦)
    """
    if raw.target_column is None:
        raise MissingColumn('<target>')

    encoding = encoding or build_encoding(raw)
    X = encode_features(raw, encoding)

    labels = raw.frame[raw.target_column].tolist()
    if class_names is None:
        class_names = sorted(set(labels))
        if len(class_names) < 2:
            raise TooFewClasses(f"타깃 클래스가 2개 이상이어야 합니다 (발견: {class_names})")
    label_map = {name: i for i, name in enumerate(class_names)}

    unknown = sorted({lab for lab in labels if lab not in label_map})
    if unknown:
        raise UnknownLabel(f"모델이 모르는 클래스 레이블: {unknown[:5]}")

    y = np.array([label_map[lab] for lab in labels], dtype=np.intp)
    return Dataset(X=X, y=y, class_names=list(class_names), feature_names=encoding.feature_names, encoding=encoding)


def load_dataset(csv_path: PathLike, schema_path: PathLike) -> Dataset:
    """CSV + 스키마 → 인코딩된 Dataset (편의 함수)"""
    raw = load_csv(csv_path, load_schema(schema_path))
    return one_hot_encode(raw)


# ==========================================
# bias / 분할
# ==========================================

def append_bias(X: np.ndarray) -> np.ndarray:
    """
    n×p 행렬 뒤에 1로 채운 컬럼을 붙여 n×(p+1)을 만듭니다.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return np.hstack([X, np.ones((X.shape[0], 1), dtype=np.float64)])


def split_indices(n: int, test_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    (train_idx, test_idx) 인덱스 분할. test 크기는 ceil(n·fraction), 최소 1.
    """
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfig(f"test_fraction은 (0,1) 범위여야 합니다: {test_fraction}")

    # 부동소수 오차로 정수값이 올림되지 않도록 여유를 둠
    n_test = max(1, math.ceil(n * test_fraction - 1e-9))
    if n_test >= n:
        raise DegenerateSplit(f"n={n}, test_fraction={test_fraction} → 학습 데이터가 비게 됩니다")

    perm = np.random.default_rng(seed).permutation(n)
    return perm[n_test:], perm[:n_test]


def train_test_split(d: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """같은 seed면 항상 같은 분할을 돌려줍니다."""
    train_idx, test_idx = split_indices(d.n_samples, test_fraction, seed)
    return d.subset(train_idx), d.subset(test_idx)
