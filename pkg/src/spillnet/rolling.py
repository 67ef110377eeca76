"""Rolling-window connectedness."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import connectedness as cx
from .errors import EstimationError, InputError, NumericalError
from .fevd import ConnectednessTable, fevd, normalize
from .ingest import Panel
from .lasso import LassoConfig, estimate_lasso
from .var_model import VarModel, VarSpec, estimate_ols

logger = logging.getLogger(__name__)


@dataclass
class RollingConfig:
    window: int
    horizon: int
    spec: VarSpec = field(default_factory=VarSpec)
    step: int = 1
    estimator: str = "ols"
    lasso: LassoConfig | None = None
    identification: str = "generalized"
    ordering: list[str] | None = None
    on_failure: str = "ridge_fallback"
    epsilon: float = 1e-4
    n_jobs: int = 1

    def problems(self) -> list[str]:
        out = []
        if self.window is None or self.window < 2:
            out.append(f"rolling.window: must be an integer >= 2, got {self.window!r}")
        if self.step is None or self.step < 1:
            out.append(f"rolling.step: must be >= 1, got {self.step!r}")
        if self.horizon is None or self.horizon < 1:
            out.append(f"horizon: must be >= 1, got {self.horizon!r}")
        if self.estimator not in ("ols", "lasso"):
            out.append(f"estimator: expected ols or lasso, got {self.estimator!r}")
        if self.on_failure not in ("skip", "ridge_fallback"):
            out.append(f"rolling.on_failure: expected skip or ridge_fallback, got {self.on_failure!r}")
        if not self.epsilon > 0:
            out.append("rolling.epsilon: must be positive")
        if self.identification not in ("generalized", "cholesky"):
            out.append(f"ident: expected generalized or cholesky, got {self.identification!r}")
        if self.identification == "cholesky" and not self.ordering:
            out.append("ordering: cholesky identification requires an explicit full ordering")
        if self.lasso is not None:
            out.extend(self.lasso.problems())
        return out


@dataclass
class WindowResult:
    table: ConnectednessTable | None
    report: cx.ConnectednessReport | None
    model: VarModel | None
    fallback: str | None
    failure: str | None


def single_shot(panel: Panel, spec: VarSpec, horizon: int, estimator: str = "ols",
                lasso: LassoConfig | None = None, identification: str = "generalized",
                ordering=None, on_failure: str = "ridge_fallback",
                epsilon: float = 1e-4) -> WindowResult:
    """Connectedness for one sample. Failures are returned, not raised."""
    fallback = None
    try:
        if estimator == "lasso":
            model = estimate_lasso(panel, spec, lasso or LassoConfig())
        else:
            model = estimate_ols(panel, spec)
    except (EstimationError, InputError) as exc:
        if on_failure != "ridge_fallback":
            return WindowResult(None, None, None, None, f"estimation: {exc}")
        try:
            model = estimate_ols(panel, spec, ridge=epsilon)
        except (EstimationError, InputError, NumericalError) as exc2:
            return WindowResult(None, None, None, None, f"estimation: {exc}; fallback: {exc2}")
        fallback = f"ridge({epsilon:g}) after {type(exc).__name__}: {exc}"
    except NumericalError as exc:
        return WindowResult(None, None, None, None, f"numerical: {exc}")
    try:
        table = normalize(fevd(model, horizon, identification, ordering))
        rep = cx.report(table)
    except NumericalError as exc:
        return WindowResult(None, None, model, fallback, f"numerical: {exc}")
    return WindowResult(table, rep, model, fallback, None)


@dataclass
class RollingSeries:
    """Per-window results aligned with ``window_end_dates``; skipped windows hold None."""

    window_end_dates: list[str]
    tables: list
    reports: list
    failures: list[tuple[str, str]]
    fallbacks: list[tuple[str, str]]
    config: RollingConfig

    @property
    def labels(self):
        for t in self.tables:
            if t is not None:
                return t.labels
        return []

    def __len__(self):
        return len(self.window_end_dates)


def window_bounds(n_obs: int, window: int, step: int = 1):
    """(start, stop) row ranges of every window, oldest first."""
    return [(end + 1 - window, end + 1) for end in range(window - 1, n_obs, step)]


def roll(panel: Panel, config: RollingConfig) -> RollingSeries:
    problems = config.problems()
    if problems:
        raise InputError("; ".join(problems))
    T = panel.n_obs
    if T < config.window:
        raise InputError(f"window width w={config.window} exceeds sample size T={T}")
    bounds = window_bounds(T, config.window, config.step)

    def work(b):
        return single_shot(panel.slice(*b), config.spec, config.horizon, config.estimator,
                           config.lasso, config.identification, config.ordering,
                           config.on_failure, config.epsilon)

    if config.n_jobs > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            results = list(pool.map(work, bounds))
    else:
        results = [work(b) for b in bounds]
    dates = [panel.dates[stop - 1] for _, stop in bounds]
    failures = [(d, r.failure) for d, r in zip(dates, results) if r.failure]
    fallbacks = [(d, r.fallback) for d, r in zip(dates, results) if r.fallback]
    for d, reason in failures:
        logger.warning("window ending %s skipped: %s", d, reason)
    if len(failures) == len(results):
        raise EstimationError(f"all {len(results)} windows failed; first: {failures[0][1]}")
    return RollingSeries(dates, [r.table for r in results], [r.report for r in results],
                         failures, fallbacks, config)


def _stat_value(rep: cx.ConnectednessReport, statistic, labels):
    kind = statistic[0]
    if kind == "total_index":
        return rep.total_index
    if kind == "total_sum":
        return rep.total_sum
    idx = [rep.table.index(lab) for lab in labels]
    if kind == "from":
        return float(rep.from_degrees[idx[0]])
    if kind == "to":
        return float(rep.to_degrees[idx[0]])
    if kind == "net":
        return float(rep.net[idx[0]])
    if kind == "pairwise":
        return float(rep.table.d[idx[0], idx[1]])
    raise InputError(f"unknown statistic {kind!r}")


def extract_path(series: RollingSeries, statistic, *labels):
    """Time path of one statistic, skipped windows omitted.

    ``statistic`` is ``"total_index"``, ``"total_sum"``, ``"from"``, ``"to"``,
    ``"net"`` (one label) or ``"pairwise"`` (labels i, j: from j to i). A tuple
    like ``("net", "SPX")`` is accepted too.
    """
    if isinstance(statistic, (tuple, list)):
        statistic, *labels = statistic
    need = {"total_index": 0, "total_sum": 0, "from": 1, "to": 1, "net": 1, "pairwise": 2}
    if statistic not in need:
        raise InputError(f"unknown statistic {statistic!r}")
    if len(labels) != need[statistic]:
        raise InputError(f"{statistic} needs {need[statistic]} label(s)")
    known = series.labels
    for lab in labels:
        if lab not in known:
            raise InputError(f"unknown label {lab!r}")
    return [(d, _stat_value(r, (statistic,), labels))
            for d, r in zip(series.window_end_dates, series.reports) if r is not None]


def write_long_csv(series: RollingSeries, path) -> None:
    """Long format: date, statistic, from_label, to_label, value.

    For ``pairwise`` rows, value is directional connectedness from
    ``from_label`` to ``to_label``; node statistics leave ``to_label`` empty.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "statistic", "from_label", "to_label", "value"])
        for date, rep in zip(series.window_end_dates, series.reports):
            if rep is None:
                continue
            w.writerow([date, "total_index", "", "", repr(rep.total_index)])
            w.writerow([date, "total_sum", "", "", repr(rep.total_sum)])
            for k, lab in enumerate(rep.labels):
                w.writerow([date, "from", lab, "", repr(float(rep.from_degrees[k]))])
                w.writerow([date, "to", lab, "", repr(float(rep.to_degrees[k]))])
                w.writerow([date, "net", lab, "", repr(float(rep.net[k]))])
            d = rep.table.d
            for i, li in enumerate(rep.labels):
                for j, lj in enumerate(rep.labels):
                    if i != j:
                        w.writerow([date, "pairwise", lj, li, repr(float(d[i, j]))])


def export(series: RollingSeries, out_dir, provenance: dict | None = None) -> dict:
    """Write the long CSV plus per-window tables and a JSON manifest; returns paths."""
    out = Path(out_dir)
    tables_dir = out / "windows"
    tables_dir.mkdir(parents=True, exist_ok=True)
    long_path = out / "rolling_long.csv"
    write_long_csv(series, long_path)
    for k, (date, rep) in enumerate(zip(series.window_end_dates, series.reports)):
        if rep is not None:
            cx.write_table_csv(rep, tables_dir / f"window_{k:05d}_{date}.csv")
    cfg = series.config
    manifest = {
        "windows": len(series),
        "window": cfg.window,
        "step": cfg.step,
        "horizon": cfg.horizon,
        "estimator": cfg.estimator,
        "identification": cfg.identification,
        "on_failure": cfg.on_failure,
        "epsilon": cfg.epsilon,
        "window_end_dates": series.window_end_dates,
        "failures": [{"date": d, "reason": r} for d, r in series.failures],
        "fallbacks": [{"date": d, "reason": r} for d, r in series.fallbacks],
    }
    if provenance:
        manifest.update(provenance)
    path = out / "rolling.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return {"long_csv": str(long_path), "tables_dir": str(tables_dir), "manifest": str(path)}
