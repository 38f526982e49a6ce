"""
MoDT Viz - 색상 팔레트 + SVG 출력 설정
게이팅 영역은 채도가 낮은 색, 데이터 점/트리 리프는 채도가 높은 클래스 색을 씁니다.
게이팅 플롯과 트리 플롯은 같은 클래스 팔레트를 공유합니다.
"""

import io
from typing import List

import matplotlib
import numpy as np
from matplotlib.colors import hsv_to_rgb, to_hex, to_rgb
from matplotlib.figure import Figure

# 클래스 색 (진한 색)
CLASS_COLORS = [
    '#3B82F6',  # blue
    '#EF4444',  # red
    '#10B981',  # green
    '#FFB800',  # gold
    '#8B5CF6',  # violet
    '#FF8C00',  # orange
    '#0F1419',  # ink
    '#EC4899',  # pink
]

# 영역 기본색 (lighten 해서 사용)
REGION_BASE_COLORS = [
    '#9CA3AF',  # gray
    '#F59E0B',  # amber
    '#14B8A6',  # teal
    '#A855F7',  # purple
    '#84CC16',  # lime
    '#F43F5E',  # rose
]

REGION_LIGHTEN = 0.72

BACKGROUND = '#ffffff'
INK = '#1c1e22'
MUTED = '#6b7280'
GRID = '#e5e7eb'

# 같은 입력이면 SVG가 바이트 단위로 같도록 id 해시 salt를 고정하고 글자는 <text>로 남김
SVG_RC = {
    'svg.hashsalt': 'modt',
    'svg.fonttype': 'none',
    'font.family': 'sans-serif',
    'font.size': 10,
    'axes.edgecolor': INK,
    'axes.labelcolor': INK,
    'xtick.color': MUTED,
    'ytick.color': MUTED,
}


def lighten(color: str, amount: float) -> str:
    """흰색 쪽으로 amount(0..1)만큼 섞습니다."""
    rgb = np.asarray(to_rgb(color))
    return to_hex(rgb + (1.0 - rgb) * amount)


def _generated(n: int, offset: int, saturation: float, value: float) -> List[str]:
    # 고정 팔레트보다 많이 필요하면 황금각 간격으로 색상환을 돕니다
    hues = ((offset + np.arange(n)) * 0.618033988749895) % 1.0
    hsv = np.column_stack([hues, np.full(n, saturation), np.full(n, value)])
    return [to_hex(rgb) for rgb in hsv_to_rgb(hsv)]


def class_palette(k: int) -> List[str]:
    """클래스 k개의 색 (모두 서로 다름, 소문자 #rrggbb)"""
    fixed = [to_hex(c) for c in CLASS_COLORS]
    if k <= len(fixed):
        return fixed[:k]
    return fixed + _generated(k - len(fixed), len(fixed), 0.85, 0.85)


def region_palette(e: int) -> List[str]:
    """전문가(영역) e개의 옅은 색 (모두 서로 다름, 소문자 #rrggbb)"""
    base = REGION_BASE_COLORS[:e]
    if e > len(REGION_BASE_COLORS):
        base = base + _generated(e - len(REGION_BASE_COLORS), 3, 0.6, 0.8)
    return [lighten(c, REGION_LIGHTEN) for c in base]


# ==========================================
# 그림 → SVG 문자열
# ==========================================

def svg_style():
    """렌더링 전체를 감싸는 rcParams 컨텍스트"""
    return matplotlib.rc_context(SVG_RC)


def new_figure(width_px: float, height_px: float, dpi: int = 100) -> Figure:
    """pyplot 전역 상태를 쓰지 않는 Figure (스레드에서 만들어도 안전)"""
    return Figure(figsize=(width_px / dpi, height_px / dpi), dpi=dpi, facecolor=BACKGROUND)


def figure_to_svg(fig: Figure) -> str:
    buf = io.BytesIO()
    fig.savefig(buf, format='svg', metadata={'Date': None}, facecolor=BACKGROUND)
    return buf.getvalue().decode('utf-8')
