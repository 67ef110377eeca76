"""Force-directed ("spring graph") layout of a connectedness table.

Nodes repel with magnitude ``k_r / dist``; each kept edge attracts its two
endpoints with magnitude ``w_ij * dist`` where ``w_ij = (d_ij + d_ji) / 2``;
optional gravity pulls each node toward the centroid with ``g * dist``. The
simulation stops at a steady state where these forces balance.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..connectedness import degrees, net_measures
from ..errors import InputError
from ..fevd import ConnectednessTable


@dataclass
class LayoutConfig:
    repulsion: float = 10.0
    gravity: float = 0.05
    max_iterations: int = 2000
    tol: float = 1e-4
    seed: int = 0
    threshold: float | None = None
    top_edges_factor: int = 3

    def problems(self) -> list[str]:
        out = []
        if not self.repulsion > 0:
            out.append("viz.repulsion: must be positive")
        if self.gravity < 0:
            out.append("viz.gravity: must be nonnegative")
        if self.max_iterations < 1:
            out.append("viz.max_iterations: must be at least 1")
        if not self.tol > 0:
            out.append("viz.tol: must be positive")
        if self.threshold is not None and not 0 <= self.threshold < 1:
            out.append(f"threshold: must lie in [0, 1), got {self.threshold}")
        if self.top_edges_factor < 1:
            out.append("viz.top_edges_factor: must be at least 1")
        return out

    def to_dict(self):
        return asdict(self)


@dataclass
class NetworkLayout:
    labels: list[str]
    positions: np.ndarray
    node_sizes: np.ndarray
    node_colors: np.ndarray
    edges: list[tuple[int, int, float]]
    converged: bool
    iterations_used: int
    directed: np.ndarray = field(repr=False)
    threshold: float = 0.0


def edge_weights(d: np.ndarray) -> np.ndarray:
    """Symmetric weights (d_ij + d_ji) / 2 with zero diagonal."""
    w = 0.5 * (d + d.T)
    np.fill_diagonal(w, 0.0)
    return w


def edge_threshold(d: np.ndarray, threshold: float | None, top_factor: int = 3) -> float:
    """Explicit ``threshold``, or the cutoff that keeps the ``top_factor * N`` heaviest edges."""
    if threshold is not None:
        return float(threshold)
    n = d.shape[0]
    iu = np.triu_indices(n, 1)
    ws = np.sort(edge_weights(d)[iu])[::-1]
    keep = top_factor * n
    return float(ws[keep]) if keep < ws.size else 0.0


def kept_edges(d: np.ndarray, threshold: float) -> list[tuple[int, int, float]]:
    w = edge_weights(d)
    n = d.shape[0]
    return [(i, j, float(w[i, j])) for i in range(n) for j in range(i + 1, n) if w[i, j] > threshold]


def _initial_positions(labels, seed, anchor):
    n = len(labels)
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, n)
    pos = np.column_stack([np.cos(angles), np.sin(angles)])
    if anchor is not None:
        where = {lab: k for k, lab in enumerate(anchor.labels)}
        for k, lab in enumerate(labels):
            if lab in where:
                pos[k] = anchor.positions[where[lab]]
    return pos


def _step(pos, W, k_r, g):
    diff = pos[:, None, :] - pos[None, :, :]
    dist2 = np.sum(diff ** 2, axis=-1)
    np.fill_diagonal(dist2, 1.0)
    dist2 = np.maximum(dist2, 1e-18)
    rep = k_r / dist2
    np.fill_diagonal(rep, 0.0)
    coef = rep - W
    force = np.einsum("ij,ijk->ik", coef, diff)
    if g > 0:
        force -= g * (pos - pos.mean(axis=0))
    stiff = rep.sum(axis=1) + W.sum(axis=1) + g
    stiff = np.maximum(stiff, 1e-12)
    # damped Jacobi-Newton step; 0.5 removes the period-2 oscillation of the undamped step
    return 0.5 * force / stiff[:, None]


def layout(table: ConnectednessTable, config: LayoutConfig | None = None,
           anchor: NetworkLayout | None = None) -> NetworkLayout:
    """Iterate the force simulation to a steady state.

    Starts from ``anchor`` positions (matched by label) when given, else from
    seeded random points on the unit circle. Non-convergence within
    ``max_iterations`` is reported through ``converged=False``.
    """
    config = config or LayoutConfig()
    problems = config.problems()
    if problems:
        raise InputError("; ".join(problems))
    if table.n < 2:
        raise InputError("layout needs at least 2 nodes")
    d = table.d
    thr = edge_threshold(d, config.threshold, config.top_edges_factor)
    edges = kept_edges(d, thr)
    W = np.zeros_like(d)
    for i, j, w in edges:
        W[i, j] = W[j, i] = w
    pos = _initial_positions(table.labels, config.seed, anchor)
    converged = False
    it = 0
    while it < config.max_iterations:
        delta = _step(pos, W, config.repulsion, config.gravity)
        pos = pos + delta
        it += 1
        if np.max(np.linalg.norm(delta, axis=1)) < config.tol:
            converged = True
            break
    if not np.all(np.isfinite(pos)):
        raise InputError("layout diverged to non-finite positions")
    _, to = degrees(table)
    net, _ = net_measures(table)
    return NetworkLayout(list(table.labels), pos, np.maximum(to, 0.0), net, edges,
                         converged, it, d.copy(), thr)


def anchor_sequence(series, config: LayoutConfig | None = None) -> list[NetworkLayout]:
    """Lay out every available window, warm-starting each from the previous frame.

    ``series`` is a RollingSeries or any iterable of tables; skipped windows
    (None) are passed over.
    """
    tables = getattr(series, "tables", series)
    frames: list[NetworkLayout] = []
    prev = None
    for table in tables:
        if table is None:
            continue
        prev = layout(table, config, anchor=prev)
        frames.append(prev)
    if not frames:
        raise InputError("series has no tables to lay out")
    return frames


def frame_displacement(frames: list[NetworkLayout]) -> np.ndarray:
    """Largest node move between consecutive frames."""
    return np.array([np.max(np.linalg.norm(b.positions - a.positions, axis=1))
                     for a, b in zip(frames, frames[1:])])
