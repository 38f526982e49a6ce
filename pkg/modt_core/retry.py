"""
MoDT Core - 재시도 데코레이터
파일을 다른 프로그램(엑셀, 백신 등)이 잡고 있을 때 잠시 후 다시 시도합니다.
"""

import logging
import time
from functools import wraps
from typing import Tuple, Type

logger = logging.getLogger('MoDT')


def retry(
    max_attempts: int = 3,
    backoff_factor: float = 2.0,
    exceptions: Tuple[Type[BaseException], ...] = (PermissionError,),
):
    """재시도 데코레이터 (exceptions에 해당하는 예외만 다시 시도, 대기 시간은 backoff_factor ** attempt)"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            last_exception = None

            for attempt in range(max_attempts):
                try:
                    return func(*args, **kwargs)

                except exceptions as e:
                    last_exception = e
                    wait_time = backoff_factor ** attempt

                    logger.warning(
                        f"⏳ {func.__name__} 실패 (시도 {attempt + 1}/{max_attempts}). "
                        f"{wait_time:.1f}초 후 재시도..."
                    )

                    if attempt < max_attempts - 1:
                        time.sleep(wait_time)

            # 모든 재시도 실패
            logger.error(f"❌ {func.__name__} {max_attempts}회 시도 모두 실패")
            raise last_exception

        return wrapper
    return decorator
