"""
MoDT Core - 모델 파일 저장/불러오기
버전이 붙은 JSON 형식 (README의 "모델 파일 형식" 참고).
타임스탬프를 넣지 않으므로 같은 학습이면 파일이 바이트 단위로 동일합니다.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from .data import FeatureEncoding
from .errors import CorruptFile, IoError, VersionMismatch
from .gating import GateMode, GatingModel
from .predict import MoDTModel
from .retry import retry
from .tree import DecisionTree

logger = logging.getLogger('MoDT.model_io')

FORMAT_NAME = 'modt-model'
FORMAT_VERSION = 1

PathLike = Union[str, Path]


def model_to_dict(model: MoDTModel) -> Dict[str, Any]:
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'class_names': list(model.class_names),
        'feature_names': list(model.feature_names),
        'encoding': model.encoding.to_dict() if model.encoding is not None else None,
        'gating': {
            'mode': model.gating.mode.to_dict(),
            'theta': model.gating.theta.tolist(),
        },
        'trees': [t.to_dict() for t in model.trees],
        'train_meta': model.train_meta,
    }


def model_from_dict(data: Dict[str, Any]) -> MoDTModel:
    if not isinstance(data, dict) or data.get('format') != FORMAT_NAME:
        raise CorruptFile("MoDT 모델 파일이 아닙니다 (format 필드 없음)")
    version = data.get('version')
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"지원하지 않는 모델 파일 버전: {version} (지원: {FORMAT_VERSION})")

    try:
        theta = np.asarray(data['gating']['theta'], dtype=np.float64)
        if theta.ndim != 2:
            raise ValueError("theta는 2차원이어야 합니다")
        encoding = data.get('encoding')
        return MoDTModel(
            gating=GatingModel(theta=theta, mode=GateMode.from_dict(data['gating']['mode'])),
            trees=[DecisionTree.from_dict(t) for t in data['trees']],
            class_names=list(data['class_names']),
            feature_names=list(data['feature_names']),
            encoding=FeatureEncoding.from_dict(encoding) if encoding is not None else None,
            train_meta=dict(data.get('train_meta') or {}),
        )
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise CorruptFile(f"모델 파일 구조가 올바르지 않습니다: {e}") from e


@retry(max_attempts=3, backoff_factor=1.0, exceptions=(PermissionError,))
def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding='utf-8')


def _write_text_safe(path: Path, text: str) -> None:
    """다른 프로그램이 파일을 잡고 있으면(PermissionError) 1초 간격으로 3번까지 다시 씁니다."""
    try:
        _write_text(path, text)
    except PermissionError as e:
        raise IoError(f"파일이 다른 프로그램에서 사용 중입니다: {path}") from e
    except OSError as e:
        raise IoError(f"모델 저장 실패: {path} ({e})") from e


def save_model(model: MoDTModel, path: PathLike) -> None:
    """모델을 JSON으로 저장합니다."""
    path = Path(path)
    text = json.dumps(model_to_dict(model), indent=2, ensure_ascii=False) + '\n'
    _write_text_safe(path, text)
    logger.info(f"✅ 모델 저장: {path}")


def load_model(path: PathLike) -> MoDTModel:
    """
    모델 파일을 읽습니다.

    Raises:
        IoError: 파일을 읽을 수 없음
        CorruptFile: JSON이 깨졌거나 구조가 맞지 않음
        VersionMismatch: 다른 형식 버전
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except UnicodeDecodeError as e:
        raise CorruptFile(f"모델 파일이 UTF-8 텍스트가 아닙니다: {path} (byte {e.start})") from e
    except OSError as e:
        raise IoError(f"모델 파일을 읽을 수 없습니다: {path} ({e})") from e

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptFile(f"모델 파일 JSON 파싱 실패: {path} ({e.msg}, line {e.lineno})") from e
    return model_from_dict(data)
