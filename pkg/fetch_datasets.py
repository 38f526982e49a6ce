"""
MoDT - 벤치마크 데이터셋 준비
datasets/ 폴더의 스키마 사이드카에 맞춰 iris.csv, banknote.csv를 만듭니다.

    python fetch_datasets.py                # 둘 다
    python fetch_datasets.py --only iris    # iris만 (네트워크 불필요)
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from utils import retry, setup_logger

logger = logging.getLogger('MoDT.datasets')

DATASETS_DIR = Path(__file__).resolve().parent / 'datasets'

IRIS_COLUMNS = ['sepal_length', 'sepal_width', 'petal_length', 'petal_width', 'species']
BANKNOTE_COLUMNS = ['variance', 'skewness', 'curtosis', 'entropy', 'class']
BANKNOTE_URL = (
    'https://archive.ics.uci.edu/ml/machine-learning-databases/00267/data_banknote_authentication.txt'
)


# ==========================================
# 데이터셋별 생성
# ==========================================

def iris_frame() -> pd.DataFrame:
    """scikit-learn에 포함된 iris (150행, 네트워크 불필요)"""
    from sklearn.datasets import load_iris

    bunch = load_iris()
    frame = pd.DataFrame(bunch.data, columns=IRIS_COLUMNS[:4])
    frame['species'] = [bunch.target_names[t] for t in bunch.target]
    return frame


@retry(max_attempts=3, backoff_factor=2.0, exceptions=(OSError,))
def banknote_frame(url: str = BANKNOTE_URL) -> pd.DataFrame:
    """UCI 원본 (헤더 없는 1372행)"""
    frame = pd.read_csv(url, header=None, names=BANKNOTE_COLUMNS)
    frame['class'] = frame['class'].astype(int).astype(str)
    return frame


def write_iris(out_dir: Union[str, Path] = DATASETS_DIR) -> Path:
    path = Path(out_dir) / 'iris.csv'
    iris_frame().to_csv(path, index=False)
    logger.info(f"✅ iris → {path}")
    return path


def write_banknote(out_dir: Union[str, Path] = DATASETS_DIR) -> Path:
    path = Path(out_dir) / 'banknote.csv'
    banknote_frame().to_csv(path, index=False)
    logger.info(f"✅ banknote → {path}")
    return path


WRITERS = {'iris': write_iris, 'banknote': write_banknote}


# ==========================================
# 실행
# ==========================================

def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description='MoDT 벤치마크 데이터셋 준비')
    parser.add_argument('--only', choices=sorted(WRITERS), action='append', help='여러 번 지정 가능')
    parser.add_argument('--out-dir', default=str(DATASETS_DIR))
    args = parser.parse_args(argv)
    setup_logger()

    failed = 0
    for name in args.only or list(WRITERS):
        try:
            WRITERS[name](args.out_dir)
        except (OSError, ImportError) as e:
            logger.error(f"❌ {name} 생성 실패: {e}")
            failed += 1
    return 5 if failed else 0


if __name__ == '__main__':
    sys.exit(main())
