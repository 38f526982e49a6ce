"""
MoDT Viz - 전문가 트리 플롯 (SVG)
위에서 아래로 배치, 내부 노드는 "feature ≤ threshold", 리프는 클래스 분포 막대.
노드는 FancyBboxPatch, 간선은 FancyArrowPatch, 글자는 annotate로 그립니다.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from matplotlib.axes import Axes
from matplotlib.patches import FancyArrowPatch, FancyBboxPatch, Patch, Rectangle

from modt_core.tree import DecisionTree, Internal, Leaf, TreeNode

from .theme import BACKGROUND, GRID, INK, MUTED, class_palette, figure_to_svg, new_figure, svg_style

# 데이터 좌표 단위: 슬롯 하나 = 가로 1, 깊이 하나 = 세로 1
NODE_W = 0.86
NODE_H = 0.42
SLOT_PX = 170
LEVEL_PX = 96
MARGIN_PX = 24
LEGEND_PX = 40
TITLE_PX = 28


@dataclass
class TreePlotSpec:
    """
    Attributes:
        tree: 그릴 트리
        feature_names / class_names: 라벨 (None이면 x[i], 클래스 인덱스)
        class_colors: 게이팅 플롯과 같은 클래스 팔레트
        title: 위쪽 제목 (예: "expert 1")
    """

    tree: DecisionTree
    feature_names: Optional[Sequence[str]] = None
    class_names: Optional[Sequence[str]] = None
    class_colors: Optional[Sequence[str]] = None
    title: Optional[str] = None


def _layout(root: TreeNode) -> Dict[int, Tuple[float, int]]:
    """노드 id → (가로 슬롯 위치, 깊이). 리프는 왼쪽부터 순서대로, 내부 노드는 자식의 가운데."""
    positions: Dict[int, Tuple[float, int]] = {}
    next_slot = [0]

    def visit(node: TreeNode, depth: int) -> float:
        if isinstance(node, Leaf):
            x = float(next_slot[0])
            next_slot[0] += 1
        else:
            x = (visit(node.left, depth + 1) + visit(node.right, depth + 1)) / 2.0
        positions[id(node)] = (x, depth)
        return x

    visit(root, 0)
    return positions


def _label(index: int, names: Optional[Sequence[str]]) -> str:
    return str(names[index]) if names is not None and index < len(names) else f"x[{index}]"


def render_tree(spec: TreePlotSpec) -> str:
    """트리 SVG 문서를 만듭니다."""
    tree = spec.tree
    k = tree.n_classes
    colors = list(spec.class_colors or class_palette(k))
    class_names = [_label(c, spec.class_names) for c in range(k)]

    positions = _layout(tree.root)
    n_slots = len(tree.leaves())
    depth = tree.depth()
    title_px = TITLE_PX if spec.title else 0

    width = max(MARGIN_PX * 2 + n_slots * SLOT_PX, 360)
    height = MARGIN_PX * 2 + title_px + (depth + 1) * LEVEL_PX + LEGEND_PX

    def center(node: TreeNode) -> Tuple[float, float]:
        slot, level = positions[id(node)]
        return slot + 0.5, -float(level)

    with svg_style():
        fig = new_figure(width, height)
        bottom = (MARGIN_PX + LEGEND_PX) / height
        top = 1.0 - (MARGIN_PX + title_px) / height
        ax = fig.add_axes([MARGIN_PX / width, bottom, 1.0 - 2 * MARGIN_PX / width, top - bottom])
        ax.set_axis_off()
        span = max(float(n_slots), (width - 2 * MARGIN_PX) / SLOT_PX)
        ax.set_xlim((n_slots - span) / 2, (n_slots + span) / 2)
        ax.set_ylim(-depth - 0.5, 0.5)

        if spec.title:
            fig.text(0.5, 1.0 - MARGIN_PX / height, spec.title, ha='center', va='top',
                     fontsize=14, fontweight='bold', color=INK, gid='title')

        counter = {'node': 0, 'edge': 0}
        stack: List[TreeNode] = [tree.root]
        while stack:
            node = stack.pop()
            cx, cy = center(node)
            if isinstance(node, Internal):
                for child, branch in ((node.left, 'yes'), (node.right, 'no')):
                    ccx, ccy = center(child)
                    edge = FancyArrowPatch(
                        (cx, cy - NODE_H / 2), (ccx, ccy + NODE_H / 2),
                        arrowstyle='-', color=MUTED, linewidth=1.2, shrinkA=0, shrinkB=0, zorder=1,
                    )
                    edge.set_gid(f"edge-{counter['edge']}")
                    ax.add_patch(edge)
                    ax.annotate(branch, ((cx + ccx) / 2, (cy + ccy) / 2), ha='center', va='center',
                                fontsize=9, color=MUTED,
                                bbox=dict(boxstyle='round,pad=0.15', facecolor=BACKGROUND, edgecolor='none'))
                    counter['edge'] += 1
                stack.extend([node.right, node.left])
                _draw_internal(ax, node, cx, cy, spec.feature_names, counter['node'])
            else:
                _draw_leaf(ax, node, cx, cy, colors, class_names, counter['node'])
            counter['node'] += 1

        handles = [Patch(facecolor=colors[c], label=name) for c, name in enumerate(class_names)]
        fig.legend(handles=handles, loc='lower left', ncol=max(1, min(k, 6)), frameon=False,
                   bbox_to_anchor=(MARGIN_PX / width, 0.0))
        return figure_to_svg(fig)


def _node_box(ax: Axes, cx: float, cy: float, gid: str, edgecolor: str, linewidth: float) -> None:
    box = FancyBboxPatch(
        (cx - NODE_W / 2, cy - NODE_H / 2), NODE_W, NODE_H,
        boxstyle='round,pad=0,rounding_size=0.05', facecolor=BACKGROUND,
        edgecolor=edgecolor, linewidth=linewidth, zorder=2,
    )
    box.set_gid(gid)
    ax.add_patch(box)


def _draw_internal(ax: Axes, node: Internal, cx: float, cy: float,
                   feature_names: Optional[Sequence[str]], index: int) -> None:
    _node_box(ax, cx, cy, f"node-internal-{index}", INK, 1.0)
    name = _label(node.feature_index, feature_names)
    ax.annotate(f"{name} ≤ {node.threshold:.4g}", (cx, cy + 0.06), ha='center', va='center',
                fontsize=11, color=INK, zorder=3)
    ax.annotate(f"weight {node.weight:.3g}", (cx, cy - 0.11), ha='center', va='center',
                fontsize=9, color=MUTED, zorder=3)


def _draw_leaf(ax: Axes, node: Leaf, cx: float, cy: float,
               colors: List[str], class_names: List[str], index: int) -> None:
    _node_box(ax, cx, cy, f"node-leaf-{index}", colors[node.majority_class], 2.0)

    # 분포 막대 (가로로 누적)
    bar_x = cx - NODE_W / 2 + 0.05
    bar_w = NODE_W - 0.1
    bar_y = cy + 0.03
    for c, share in enumerate(node.distribution):
        if share <= 0:
            continue
        bar = Rectangle((bar_x, bar_y), bar_w * share, 0.12, facecolor=colors[c], edgecolor='none', zorder=3)
        bar.set_gid(f"bar-{index}-{c}")
        ax.add_patch(bar)
        bar_x += bar_w * share
    ax.add_patch(Rectangle((cx - NODE_W / 2 + 0.05, bar_y), bar_w, 0.12, fill=False,
                           edgecolor=GRID, linewidth=0.5, zorder=3))
    ax.annotate(class_names[node.majority_class], (cx, cy - 0.1), ha='center', va='center',
                fontsize=11, fontweight='bold', color=INK, zorder=3)
