from .export import export_graph, read_edge_csv
from .layout import LayoutConfig, NetworkLayout, anchor_sequence, frame_displacement, layout
from .render import render_svg

__all__ = ["LayoutConfig", "NetworkLayout", "layout", "anchor_sequence", "frame_displacement",
           "render_svg", "export_graph", "read_edge_csv"]
