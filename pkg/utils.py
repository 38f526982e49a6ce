"""
MoDT - 공통 유틸리티 함수 모음
로거 설정, 설정값 로딩/검증(ConfigValidator), 재시도 데코레이터를 제공합니다.
"""

import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from dotenv import dotenv_values, load_dotenv

from modt_core.errors import InvalidConfig
from modt_core.retry import retry

__all__ = ['LOGGER_NAME', 'CONFIG_KEYS', 'ConfigValidator', 'retry', 'setup_logger']

LOGGER_NAME = 'MoDT'


# ==========================================
# 로깅
# ==========================================

def setup_logger(level: Union[int, str] = logging.INFO, log_file: Optional[str] = None) -> logging.Logger:
    """
    'MoDT' 로거에 콘솔 핸들러(와 선택적으로 파일 핸들러)를 붙입니다.
    여러 번 호출해도 핸들러가 중복되지 않도록 기존 핸들러는 교체합니다.

    Args:
        level: 로그 레벨 (--verbose=DEBUG, --quiet=WARNING)
        log_file: 로그 파일 경로 (None이면 파일 기록 안 함)

    Returns:
        logging.Logger: 'MoDT' 루트 로거
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # 콘솔 핸들러 (터미널 출력)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))
    logger.addHandler(console_handler)

    # 파일 핸들러
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
        logger.addHandler(file_handler)

    logger.propagate = False
    return logger


# ==========================================
# 설정
# ==========================================

def _parse_pair(value: Any) -> Optional[Tuple[int, int]]:
    if value is None or value == '':
        return None
    if isinstance(value, (tuple, list)):
        parts = list(value)
    else:
        parts = [p.strip() for p in str(value).split(',')]
    if len(parts) != 2:
        raise ValueError(f"'i,j' 형식이어야 합니다: {value!r}")
    return int(parts[0]), int(parts[1])


def _optional_str(value: Any) -> Optional[str]:
    return None if value is None or value == '' else str(value)


# 키 → (변환 함수, 기본값)
CONFIG_KEYS: Dict[str, Tuple[Callable[[Any], Any], Any]] = {
    'experts': (int, 3),
    'depth': (int, 2),
    'gate': (str, '2d'),
    'gamma': (float, 3.0),
    'iterations': (int, 40),
    'seed': (int, 0),
    'selection': (str, 'tree_importance'),
    'features': (_parse_pair, None),
    'model_selection': (str, 'best_training_accuracy'),
    'tol': (float, 1e-6),
    'threads': (int, 1),
    'trials': (int, 100),
    'top_k': (int, 10),
    'reps': (int, 20),
    'test_fraction': (float, 0.25),
    'log_file': (_optional_str, None),
}

CHOICES = {
    'gate': ('2d', 'full'),
    'selection': ('tree_importance', 'linear_importance', 'pca'),
    'model_selection': ('best_training_accuracy', 'last_iteration'),
}


class ConfigValidator:
    """설정 검증 클래스 (우선순위: CLI > 설정 파일 > 환경 변수 MODT_* > 기본값)"""

    ENV_PREFIX = 'MODT_'

    @staticmethod
    def coerce(key: str, value: Any) -> Any:
        """문자열 값을 키에 맞는 타입으로 변환"""
        if key not in CONFIG_KEYS:
            raise InvalidConfig(f"알 수 없는 설정 키: '{key}'")
        convert, _ = CONFIG_KEYS[key]
        if value is None:
            return None
        try:
            return convert(value.strip() if isinstance(value, str) else value)
        except (TypeError, ValueError) as e:
            raise InvalidConfig(f"설정 '{key}' 값이 올바르지 않습니다: {value!r} ({e})") from e

    @staticmethod
    def validate(config: Dict[str, Any]) -> Dict[str, Any]:
        """범위 검증 후 그대로 돌려줍니다."""
        checks = [
            ('experts', lambda v: v >= 1, "1 이상"),
            ('depth', lambda v: v >= 1, "1 이상"),
            ('gamma', lambda v: v > 0, "양수"),
            ('iterations', lambda v: v >= 1, "1 이상"),
            ('tol', lambda v: v >= 0, "0 이상"),
            ('threads', lambda v: v >= 1, "1 이상"),
            ('trials', lambda v: v >= 1, "1 이상"),
            ('top_k', lambda v: v >= 1, "1 이상"),
            ('reps', lambda v: v >= 1, "1 이상"),
            ('test_fraction', lambda v: 0 < v < 1, "(0, 1) 범위"),
        ]
        for key, ok, rule in checks:
            if key in config and config[key] is not None and not ok(config[key]):
                raise InvalidConfig(f"설정 '{key}'는 {rule}여야 합니다: {config[key]}")

        for key, allowed in CHOICES.items():
            if config.get(key) is not None and config[key] not in allowed:
                raise InvalidConfig(f"설정 '{key}'는 {' | '.join(allowed)} 중 하나여야 합니다: {config[key]!r}")

        if config.get('trials') is not None and config.get('top_k') is not None:
            if config['top_k'] > config['trials']:
                raise InvalidConfig(f"top_k({config['top_k']})가 trials({config['trials']})보다 클 수 없습니다")
        return config

    @classmethod
    def from_env(cls) -> Dict[str, Any]:
        """.env 파일과 환경 변수에서 MODT_* 값을 읽습니다."""
        load_dotenv()
        values = {}
        for key in CONFIG_KEYS:
            raw = os.getenv(cls.ENV_PREFIX + key.upper())
            if raw is not None and raw != '':
                values[key] = cls.coerce(key, raw)
        return values

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> Dict[str, Any]:
        """key=value 설정 파일 (스키마 사이드카와 같은 형식)"""
        path = Path(path)
        if not path.is_file():
            raise InvalidConfig(f"설정 파일을 찾을 수 없습니다: {path}")
        return {key: cls.coerce(key, raw) for key, raw in dotenv_values(path).items()}

    @classmethod
    def load_config(
        cls,
        cli_overrides: Optional[Dict[str, Any]] = None,
        config_path: Optional[Union[str, Path]] = None,
    ) -> Dict[str, Any]:
        """
        우선순위에 따라 설정을 합칩니다.

        Args:
            cli_overrides: CLI에서 명시한 값 (None 값은 '지정 안 함')
            config_path: --config 파일 경로

        Returns:
            Dict[str, Any]: 모든 키가 채워진 검증된 설정
        """
        config = {key: default for key, (_, default) in CONFIG_KEYS.items()}
        config.update(cls.from_env())
        if config_path is not None:
            config.update(cls.from_file(config_path))
        for key, value in (cli_overrides or {}).items():
            if value is not None:
                config[key] = cls.coerce(key, value)
        return cls.validate(config)


