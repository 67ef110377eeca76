"""Empirical tail-risk measures (MES, CoVaR) set beside connectedness degrees.

Losses are reported as positive numbers: VaR and CoVaR are negated lower
quantiles. Quantiles use linear interpolation (numpy's default, "type 7").
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .connectedness import degrees
from .errors import InputError
from .fevd import ConnectednessTable
from .ingest import Panel

MIN_RELIABLE_ROWS = 5


@dataclass(frozen=True)
class TailConfig:
    p: float = 0.05
    min_tail_obs: int = 20

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.p <= 0.5:
            out.append(f"risk.p: must lie in (0, 0.5], got {self.p}")
        if self.min_tail_obs < 5:
            out.append(f"risk.min_tail_obs: must be at least 5, got {self.min_tail_obs}")
        return out


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"series lengths differ ({a.shape} vs {b.shape})")
    return a, b


def _check(config):
    problems = config.problems()
    if problems:
        raise InputError("; ".join(problems))


def distress_days(r: np.ndarray, p: float) -> np.ndarray:
    """Boolean mask of VaR-breach days: r at or below its empirical p-quantile."""
    return r <= np.quantile(r, p)


def mes(returns_j, returns_mkt, config: TailConfig = TailConfig()) -> float:
    """Mean of ``returns_j`` over days when the market is in its lower p-tail."""
    _check(config)
    rj, rm = _pair(returns_j, returns_mkt)
    event = distress_days(rm, config.p)
    n = int(event.sum())
    if n < config.min_tail_obs:
        raise InputError(f"only {n} tail days; need {config.min_tail_obs}")
    return float(rj[event].mean())


def covar(returns_target, returns_i, config: TailConfig = TailConfig()):
    """CoVaR of ``returns_target`` given a VaR breach of ``returns_i``.

    Returns
    -------
    (var_unconditional, covar, delta_covar)
        ``delta_covar`` subtracts the CoVaR computed over median-state days,
        those with ``returns_i`` between its quartiles.
    """
    _check(config)
    rt, ri = _pair(returns_target, returns_i)
    breach = distress_days(ri, config.p)
    lo, hi = np.quantile(ri, [0.25, 0.75])
    median_state = (ri >= lo) & (ri <= hi)
    for name, mask in (("breach", breach), ("median-state", median_state)):
        n = int(mask.sum())
        if n < config.min_tail_obs:
            raise InputError(f"only {n} {name} days; need {config.min_tail_obs}")
    var_u = -float(np.quantile(rt, config.p))
    cv = -float(np.quantile(rt[breach], config.p))
    cv_med = -float(np.quantile(rt[median_state], config.p))
    return var_u, cv, cv - cv_med


@dataclass
class RiskReport:
    labels: list[str]
    mes: np.ndarray
    from_degrees: np.ndarray
    covar: np.ndarray
    delta_covar: np.ndarray
    to_degrees: np.ndarray
    rho_mes_from: float
    rho_covar_to: float
    reliable: bool
    mkt_label: str

    def to_dict(self):
        return {
            "mkt_label": self.mkt_label,
            "rows": [
                {"label": lab, "mes": float(self.mes[k]), "from_degree": float(self.from_degrees[k]),
                 "covar": float(self.covar[k]), "delta_covar": float(self.delta_covar[k]),
                 "to_degree": float(self.to_degrees[k])}
                for k, lab in enumerate(self.labels)
            ],
            "spearman_mes_from": _nan_none(self.rho_mes_from),
            "spearman_covar_to": _nan_none(self.rho_covar_to),
            "reliable": self.reliable,
        }

    def write(self, csv_path=None, json_path=None):
        if csv_path is not None:
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["label", "MES", "from_degree", "CoVaR", "to_degree", "delta_CoVaR"])
                for k, lab in enumerate(self.labels):
                    w.writerow([lab, repr(float(self.mes[k])), repr(float(self.from_degrees[k])),
                                repr(float(self.covar[k])), repr(float(self.to_degrees[k])),
                                repr(float(self.delta_covar[k]))])
        if json_path is not None:
            with open(json_path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(self.to_dict(), indent=2) + "\n")


def _nan_none(x):
    return None if not np.isfinite(x) else float(x)


def _spearman(a, b):
    if len(a) < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return float("nan")
    return float(spearmanr(a, b).statistic)


def risk_vs_connectedness(panel: Panel, table: ConnectednessTable, mkt_label: str,
                          config: TailConfig = TailConfig()) -> RiskReport:
    """Per-label MES (vs market) next to from-degree, CoVaR-to-market next to to-degree.

    Rank correlations from fewer than five labels are flagged unreliable.
    """
    if mkt_label not in panel.labels:
        raise InputError(f"market label {mkt_label!r} not in panel")
    missing = [lab for lab in table.labels if lab not in panel.labels]
    if missing:
        raise InputError(f"table labels missing from panel: {missing}")
    rm = panel.column(mkt_label)
    frm, to = degrees(table)
    m, cv, dcv = [], [], []
    for lab in table.labels:
        r = panel.column(lab)
        m.append(mes(r, rm, config))
        _, c, dc = covar(rm, r, config)
        cv.append(c)
        dcv.append(dc)
    m, cv, dcv = np.array(m), np.array(cv), np.array(dcv)
    return RiskReport(list(table.labels), m, frm, cv, dcv, to,
                      _spearman(m, frm), _spearman(cv, to),
                      table.n >= MIN_RELIABLE_ROWS, mkt_label)
