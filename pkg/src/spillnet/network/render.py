"""Standalone SVG rendering of a network layout.

Output is a pure function of the layout: numbers are written with fixed
precision and elements in a fixed order, so equal layouts give identical
bytes.
"""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..errors import OutputError
from .layout import NetworkLayout

MARGIN = 0.05


def _f(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def diverging_color(value: float, scale: float) -> str:
    """Blue (negative) through white to red (positive)."""
    t = 0.0 if scale <= 0 else max(-1.0, min(1.0, value / scale))
    if t >= 0:
        rgb = (255, round(255 * (1 - t)), round(255 * (1 - t)))
    else:
        rgb = (round(255 * (1 + t)), round(255 * (1 + t)), 255)
    return "#%02x%02x%02x" % rgb


def directed_edges(layout: NetworkLayout):
    """(source, target, weight) for each direction of each kept edge above threshold.

    Weight of source j -> target i is d_ij.
    """
    out = []
    for i, j, _ in layout.edges:
        for src, dst in ((j, i), (i, j)):
            w = float(layout.directed[dst, src])
            if w > layout.threshold:
                out.append((src, dst, w))
    return out


def _radii(layout, extent):
    sizes = np.asarray(layout.node_sizes, dtype=float)
    top = sizes.max() if sizes.size and sizes.max() > 0 else 1.0
    return extent * (0.02 + 0.04 * sizes / top)


def svg_document(layout: NetworkLayout, width: int = 800) -> str:
    pos = np.asarray(layout.positions, dtype=float)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    extent = float(max(np.max(hi - lo), 1e-9))
    radii = _radii(layout, extent)
    rmax = float(radii.max())
    lo = lo - rmax
    hi = hi + rmax
    span = hi - lo
    lo = lo - MARGIN * span
    span = span * (1 + 2 * MARGIN)
    height = max(1, round(width * span[1] / span[0]))
    edges = directed_edges(layout)
    wmax = max((w for _, _, w in edges), default=1.0)
    cscale = float(np.max(np.abs(layout.node_colors))) if len(layout.node_colors) else 0.0
    font = extent * 0.035
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="{_f(lo[0])} {_f(lo[1])} {_f(span[0])} {_f(span[1])}">',
        "<defs>",
        '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="4" '
        'markerHeight="4" orient="auto"><polygon points="0,0 10,5 0,10" fill="#555555"/></marker>',
        "</defs>",
        '<g id="edges" fill="none" stroke="#555555" stroke-opacity="0.6">',
    ]
    for src, dst, w in edges:
        a, b = pos[src], pos[dst]
        v = b - a
        length = float(np.hypot(*v))
        if length == 0:
            continue
        u = v / length
        start = a + u * radii[src]
        end = b - u * radii[dst]
        normal = np.array([u[1], -u[0]])
        ctrl = 0.5 * (start + end) + normal * 0.15 * length
        sw = extent * (0.002 + 0.012 * w / wmax)
        lines.append(
            f'<path class="edge" d="M {_f(start[0])} {_f(start[1])} Q {_f(ctrl[0])} {_f(ctrl[1])} '
            f'{_f(end[0])} {_f(end[1])}" stroke-width="{_f(sw)}" marker-end="url(#arrow)">'
            f"<title>{escape(layout.labels[src])} -&gt; {escape(layout.labels[dst])}: {w:.4f}</title></path>")
    lines.append("</g>")
    lines.append('<g id="nodes" stroke="#333333">')
    for k, lab in enumerate(layout.labels):
        fill = diverging_color(float(layout.node_colors[k]), cscale)
        lines.append(f'<circle cx="{_f(pos[k, 0])}" cy="{_f(pos[k, 1])}" r="{_f(radii[k])}" '
                     f'fill="{fill}" stroke-width="{_f(extent * 0.003)}"/>')
    lines.append("</g>")
    lines.append(f'<g id="labels" font-family="sans-serif" font-size="{_f(font)}" '
                 'text-anchor="middle" fill="#000000">')
    for k, lab in enumerate(layout.labels):
        lines.append(f'<text x="{_f(pos[k, 0])}" y="{_f(pos[k, 1] - radii[k] - 0.3 * font)}">'
                     f"{escape(lab)}</text>")
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_svg(layout: NetworkLayout, path, width: int = 800) -> Path:
    path = Path(path)
    try:
        path.write_text(svg_document(layout, width), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


__all__ = ["render_svg", "svg_document", "directed_edges", "diverging_color"]
