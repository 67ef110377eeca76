"""Directed weighted edge lists in DOT, GEXF 1.2 and CSV form.

An edge ``source -> target`` carries weight d[target, source], the share of
the target's forecast-error variance due to shocks in the source.
"""
from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import quoteattr

from ..errors import InputError, OutputError
from ..fevd import ConnectednessTable

FORMATS = ("dot", "gexf", "edge_csv")


def directed_edge_list(table: ConnectednessTable, threshold: float = 0.0):
    if not 0 <= threshold < 1:
        raise InputError(f"threshold must lie in [0, 1), got {threshold}")
    d = table.d
    labs = table.labels
    return [(labs[j], labs[i], float(d[i, j]))
            for j in range(table.n) for i in range(table.n)
            if i != j and d[i, j] > threshold]


def _dot_id(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(table, threshold=0.0) -> str:
    lines = ["digraph connectedness {"]
    for lab in table.labels:
        lines.append(f"  {_dot_id(lab)};")
    for src, dst, w in directed_edge_list(table, threshold):
        lines.append(f"  {_dot_id(src)} -> {_dot_id(dst)} [weight={w!r}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_gexf(table, threshold=0.0) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://gexf.net/1.2" version="1.2">',
        '  <graph mode="static" defaultedgetype="directed">',
        "    <nodes>",
    ]
    ids = {lab: k for k, lab in enumerate(table.labels)}
    for lab, k in ids.items():
        lines.append(f'      <node id="{k}" label={quoteattr(lab)}/>')
    lines += ["    </nodes>", "    <edges>"]
    for e, (src, dst, w) in enumerate(directed_edge_list(table, threshold)):
        lines.append(f'      <edge id="{e}" source="{ids[src]}" target="{ids[dst]}" weight="{w!r}"/>')
    lines += ["    </edges>", "  </graph>", "</gexf>"]
    return "\n".join(lines) + "\n"


def export_graph(table: ConnectednessTable, path, format: str = "edge_csv",
                 threshold: float = 0.0) -> Path:
    if format not in FORMATS:
        raise InputError(f"unknown graph format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    try:
        if format == "dot":
            path.write_text(to_dot(table, threshold), encoding="utf-8")
        elif format == "gexf":
            path.write_text(to_gexf(table, threshold), encoding="utf-8")
        else:
            with path.open("w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["source", "target", "weight"])
                for src, dst, wt in directed_edge_list(table, threshold):
                    w.writerow([src, dst, repr(wt)])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_edge_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return [(s, t, float(w)) for s, t, w in rows[1:]]
