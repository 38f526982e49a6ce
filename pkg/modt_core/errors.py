"""
MoDT Core - 예외 계층
모든 모듈 에러는 ModtError 하위 클래스이며, CLI 종료 코드(exit_code)를 함께 가집니다.

    usage=2, data=3, training=4, io=5
"""

from typing import Optional


class ModtError(Exception):
    """MoDT 공통 예외 (CLI가 잡아서 한 줄 진단 메시지로 출력)"""

    exit_code: int = 1


# ==========================================
# 사용법 / 설정 오류 (exit 2)
# ==========================================

class UsageError(ModtError, ValueError):
    exit_code = 2


class InvalidConfig(UsageError):
    """하이퍼파라미터 또는 설정 파일 값이 허용 범위를 벗어남"""


class NotTwoDGate(UsageError):
    """2D 게이트가 아닌 모델로 게이팅 플롯을 요청함"""

    def __init__(self, message: Optional[str] = None) -> None:
        super().__init__(
            message
            or "게이팅 플롯은 2D 게이트 모델만 지원합니다. --gate 2d 로 다시 학습하세요."
        )


# ==========================================
# 데이터 오류 (exit 3)
# ==========================================

class DataError(ModtError, ValueError):
    exit_code = 3


class MissingColumn(DataError):
    def __init__(self, column: str) -> None:
        super().__init__(f"필수 컬럼 누락: '{column}'")
        self.column = column


class MissingValue(DataError):
    def __init__(self, row: int, column: str) -> None:
        super().__init__(f"값 누락 (row={row}, col='{column}')")
        self.row = row
        self.column = column


class UnparsableNumeric(DataError):
    def __init__(self, row: int, column: str, value: str) -> None:
        super().__init__(f"숫자 변환 실패 (row={row}, col='{column}', value={value!r})")
        self.row = row
        self.column = column


class EmptyFile(DataError):
    pass


class MalformedCsv(DataError):
    """행마다 필드 수가 다르거나 따옴표가 깨진 CSV"""


class BadEncoding(DataError):
    """UTF-8로 읽을 수 없는 파일"""


class TooFewClasses(DataError):
    pass


class UnknownLabel(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class WidthMismatch(DataError):
    def __init__(self, expected: int, got: int) -> None:
        super().__init__(f"특성 개수 불일치: 모델은 {expected}개, 입력은 {got}개")
        self.expected = expected
        self.got = got


class BadFeatureIndex(DataError):
    pass


class TooFewFeatures(DataError):
    pass


class BadManualPair(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class EmptyInput(DataError):
    pass


class AllWeightsZero(DataError):
    pass


class ZeroMass(DataError):
    pass


# ==========================================
# 학습 오류 (exit 4)
# ==========================================

class TrainingError(ModtError):
    exit_code = 4


class DegenerateExpert(TrainingError):
    def __init__(self, expert: int, mass: float) -> None:
        super().__init__(f"expert {expert}의 게이팅 질량이 너무 작습니다 (mass={mass:.3g})")
        self.expert = expert
        self.mass = mass


# ==========================================
# 모델 파일 입출력 오류 (exit 5)
# ==========================================

class ModelIOError(ModtError):
    exit_code = 5


class IoError(ModelIOError):
    pass


class VersionMismatch(ModelIOError):
    pass


class CorruptFile(ModelIOError):
    pass
