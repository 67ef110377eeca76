"""Connectedness statistics read off a decomposition table.

Naming follows network language (from-/to-degree); the trade-analogy names
("imports", "exports", trade balances) are display aliases of the same
quantities.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .fevd import ConnectednessTable

ALIASES = {
    "pairwise": "imports from",
    "from": "total imports",
    "to": "total exports",
    "net": "multilateral trade balance",
    "pairwise_net": "bilateral trade balance",
    "total": "total world exports",
}


@dataclass
class ConnectednessReport:
    table: ConnectednessTable
    from_degrees: np.ndarray
    to_degrees: np.ndarray
    net: np.ndarray
    pairwise_net: np.ndarray
    total_sum: float
    total_index: float

    @property
    def labels(self):
        return self.table.labels

    def to_dict(self) -> dict:
        return {
            "table": self.table.to_dict(),
            "from": self.from_degrees.tolist(),
            "to": self.to_degrees.tolist(),
            "net": self.net.tolist(),
            "pairwise_net": self.pairwise_net.tolist(),
            "total_sum": self.total_sum,
            "total_index": self.total_index,
            "aliases": ALIASES,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def pairwise(table: ConnectednessTable, i, j) -> float:
    """Directional connectedness from ``j`` to ``i`` (d_ij). Accepts labels or indices."""
    i = table.index(i) if isinstance(i, str) else int(i)
    j = table.index(j) if isinstance(j, str) else int(j)
    if i == j:
        raise InputError("pairwise connectedness needs i != j; use self_share() for the diagonal")
    return float(table.d[i, j])


def self_share(table: ConnectednessTable, i) -> float:
    i = table.index(i) if isinstance(i, str) else int(i)
    return float(table.d[i, i])


def degrees(table: ConnectednessTable):
    """(from_degrees, to_degrees): off-diagonal row sums and column sums."""
    off = table.d - np.diag(np.diag(table.d))
    return off.sum(axis=1), off.sum(axis=0)


def net_measures(table: ConnectednessTable):
    """(net, pairwise_net) with net[i] = to[i] - from[i] and pairwise_net[i, j] = d_ji - d_ij."""
    d = table.d
    pw = d.T - d
    # built from the antisymmetric matrix so the zero-sum identity holds structurally
    net = pw.sum(axis=1)
    return net, pw


def total(table: ConnectednessTable):
    """(grand off-diagonal sum, sum / N)."""
    s = float(table.d.sum() - np.trace(table.d))
    return s, s / table.n


def report(table: ConnectednessTable) -> ConnectednessReport:
    frm, to = degrees(table)
    net, pw = net_measures(table)
    s, idx = total(table)
    rep = ConnectednessReport(table, frm, to, net, pw, s, idx)
    _check(rep)
    return rep


def _check(rep):
    assert np.array_equal(rep.pairwise_net, -rep.pairwise_net.T)
    assert abs(rep.net.sum()) < 1e-9
    assert abs(rep.total_sum - rep.from_degrees.sum()) < 1e-9
    assert abs(rep.total_sum - rep.to_degrees.sum()) < 1e-9


def _pct(x):
    return f"{100.0 * x:.2f}"


def table_csv(rep: ConnectednessReport, total: str = "index") -> str:
    """Bordered table layout: entries in percent, FROM column, TO and NET rows.

    The bottom-right cell of the TO row holds the total: the 0-100 index by
    default, or the raw off-diagonal sum (in percent) with ``total="sum"``.
    """
    if total not in ("index", "sum"):
        raise InputError(f"total must be 'index' or 'sum', got {total!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    labels = rep.labels
    w.writerow(["", *labels, "FROM"])
    for i, lab in enumerate(labels):
        w.writerow([lab, *(_pct(v) for v in rep.table.d[i]), _pct(rep.from_degrees[i])])
    grand = rep.total_index if total == "index" else rep.total_sum
    w.writerow(["TO", *(_pct(v) for v in rep.to_degrees), _pct(grand)])
    w.writerow(["NET", *(_pct(v) for v in rep.net), ""])
    return buf.getvalue()


def write_table_csv(rep: ConnectednessReport, path, total: str = "index") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_csv(rep, total))
