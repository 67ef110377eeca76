"""Matplotlib figures written next to the delimited report files."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .connectedness import ConnectednessReport

# fixed metadata keeps PNG bytes stable across runs
PNG_METADATA = {"Software": None}


def table_heatmap(rep: ConnectednessReport, path, annotate_max: int = 12, dpi: int = 120) -> Path:
    """Heatmap of the connectedness table with from/to margins in the tick labels."""
    d = rep.table.d
    n = d.shape[0]
    size = min(2.0 + 0.45 * n, 14.0)
    fig = Figure(figsize=(size + 1.5, size))
    ax = fig.add_subplot(1, 1, 1)
    im = ax.imshow(100 * d, cmap="viridis", vmin=0, vmax=100)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="% of forecast-error variance")
    if n <= 40:
        ax.set_xticks(np.arange(n))
        ax.set_yticks(np.arange(n))
        ax.set_xticklabels([f"{lab}\n{100 * t:.1f}" for lab, t in zip(rep.labels, rep.to_degrees)],
                           fontsize=8)
        ax.set_yticklabels([f"{lab} {100 * f:.1f}" for lab, f in zip(rep.labels, rep.from_degrees)],
                           fontsize=8)
    if n <= annotate_max:
        for i in range(n):
            for j in range(n):
                ax.text(j, i, f"{100 * d[i, j]:.1f}", ha="center", va="center", fontsize=7,
                        color="white" if d[i, j] < 0.5 else "black")
    ax.set_xlabel("shock origin j (to-degree, %)")
    ax.set_ylabel("variable i (from-degree, %)")
    ax.set_title(f"H={rep.table.horizon} {rep.table.identification}: "
                 f"total index {100 * rep.total_index:.2f}%")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=dpi, metadata=PNG_METADATA)
    return path
