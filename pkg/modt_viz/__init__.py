"""
MoDT Viz Module
SVG rendering of 2D gating regions and expert trees.
"""

from .gate_plot import GatePlotSpec, gating_grid, render_gating_plot
from .tree_plot import TreePlotSpec, render_tree

__all__ = ['GatePlotSpec', 'gating_grid', 'render_gating_plot', 'TreePlotSpec', 'render_tree']
