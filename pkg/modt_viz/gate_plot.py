"""
MoDT Viz - 2D 게이팅 영역 플롯 (SVG)
격자 셀마다 게이팅 값이 가장 큰 전문가의 색을 칠하고(imshow) 그 위에 데이터 점을 그립니다(scatter).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from matplotlib.colors import BoundaryNorm, ListedColormap
from matplotlib.lines import Line2D
from matplotlib.patches import Patch

from modt_core.data import Dataset, append_bias
from modt_core.errors import InvalidConfig, NotTwoDGate, WidthMismatch
from modt_core.gating import gating_values, select_experts
from modt_core.predict import MoDTModel

from .theme import INK, MUTED, class_palette, figure_to_svg, new_figure, region_palette, svg_style

logger = logging.getLogger('MoDT.viz')

PADDING = 0.05

Range = Tuple[float, float]


@dataclass
class GatePlotSpec:
    """
    Attributes:
        model: 2D 게이트 모델 (또는 특성이 2개뿐인 full 게이트 모델)
        dataset: 겹쳐 그릴 데이터 (축 범위도 여기서 계산)
        resolution: 축당 격자 셀 수
        region_colors / class_colors: None이면 theme 기본 팔레트
    """

    model: MoDTModel
    dataset: Dataset
    resolution: int = 300
    region_colors: Optional[Sequence[str]] = None
    class_colors: Optional[Sequence[str]] = None
    width: int = 720
    height: int = 560


# ==========================================
# 계산
# ==========================================

def plot_features(model: MoDTModel) -> Tuple[int, int]:
    """게이팅 플롯의 (x축, y축) 특성 인덱스"""
    mode = model.gating.mode
    if mode.is_two_d:
        return mode.features
    if model.n_features == 2:
        return 0, 1
    raise NotTwoDGate()


def axis_ranges(X2: np.ndarray, padding: float = PADDING) -> Tuple[Range, Range]:
    """데이터 min/max를 양쪽으로 padding 비율만큼 넓힌 축 범위"""
    ranges = []
    for col in (X2[:, 0], X2[:, 1]):
        lo, hi = float(np.min(col)), float(np.max(col))
        span = hi - lo
        if span <= 0:
            lo, hi, span = lo - 0.5, hi + 0.5, 1.0
        ranges.append((lo - padding * span, hi + padding * span))
    return ranges[0], ranges[1]


def cell_centers(axis_range: Range, resolution: int) -> np.ndarray:
    lo, hi = axis_range
    return lo + (np.arange(resolution) + 0.5) * (hi - lo) / resolution


def gating_grid(model: MoDTModel, x_range: Range, y_range: Range, resolution: int) -> np.ndarray:
    """
    격자 셀 중심마다 선택되는 전문가 인덱스

    Returns:
        np.ndarray: resolution×resolution, [row=y 인덱스(아래→위), col=x 인덱스(왼→오)]
    """
    plot_features(model)
    xs = cell_centers(x_range, resolution)
    ys = cell_centers(y_range, resolution)
    xx, yy = np.meshgrid(xs, ys)
    Xg = append_bias(np.column_stack([xx.ravel(), yy.ravel()]))
    experts = select_experts(gating_values(Xg, model.gating.theta))
    return experts.reshape(resolution, resolution)


# ==========================================
# 렌더링
# ==========================================

def render_gating_plot(spec: GatePlotSpec) -> str:
    """
    2D 게이팅 영역 + 데이터 점 SVG 문서를 만듭니다.

    Raises:
        NotTwoDGate: 2D로 그릴 수 없는 게이트
    """
    model, dataset = spec.model, spec.dataset
    i, j = plot_features(model)
    if spec.resolution < 1:
        raise InvalidConfig(f"resolution은 1 이상이어야 합니다: {spec.resolution}")
    if dataset.n_features != model.n_features:
        raise WidthMismatch(model.n_features, dataset.n_features)

    X2 = dataset.X[:, [i, j]]
    x_range, y_range = axis_ranges(X2)
    grid = gating_grid(model, x_range, y_range, spec.resolution)

    regions = list(spec.region_colors or region_palette(model.e))
    classes = list(spec.class_colors or class_palette(model.n_classes))

    with svg_style():
        fig = new_figure(spec.width, spec.height)
        ax = fig.add_axes([0.09, 0.1, 0.66, 0.85])

        # 영역: 셀 하나 = 이미지 픽셀 하나 (interpolation='none'이면 SVG에 원본 해상도로 들어감)
        cmap = ListedColormap(regions[:model.e])
        norm = BoundaryNorm(np.arange(model.e + 1) - 0.5, model.e)
        image = ax.imshow(
            grid, cmap=cmap, norm=norm, origin='lower', interpolation='none', aspect='auto',
            extent=(x_range[0], x_range[1], y_range[0], y_range[1]),
        )
        image.set_gid('regions')

        points = ax.scatter(
            X2[:, 0], X2[:, 1], c=[classes[int(c)] for c in dataset.y],
            s=14, edgecolors=INK, linewidths=0.4, zorder=3,
        )
        points.set_gid('points')

        ax.set_xlim(*x_range)
        ax.set_ylim(*y_range)
        ax.set_xlabel(model.feature_names[i])
        ax.set_ylabel(model.feature_names[j])

        # 범례: 영역은 오른쪽 위, 클래스는 오른쪽 아래
        expert_handles = [
            Patch(facecolor=regions[e], edgecolor=MUTED, linewidth=0.5, label=f"expert {e}")
            for e in range(model.e)
        ]
        class_handles = [
            Line2D([], [], marker='o', linestyle='', markerfacecolor=classes[c], markeredgecolor=INK,
                   markeredgewidth=0.4, label=str(name))
            for c, name in enumerate(model.class_names)
        ]
        expert_legend = ax.legend(handles=expert_handles, title='Experts', loc='upper left',
                                  bbox_to_anchor=(1.02, 1.0), frameon=False)
        ax.add_artist(expert_legend)
        ax.legend(handles=class_handles, title='Classes', loc='lower left',
                  bbox_to_anchor=(1.02, 0.0), frameon=False)

        logger.debug(f"🎨 게이팅 플롯 생성 (features=({i}, {j}), resolution={spec.resolution})")
        return figure_to_svg(fig)
