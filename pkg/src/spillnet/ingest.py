"""Loading and transforming panel time series.

The on-disk format is a UTF-8 CSV whose first column holds ISO-8601 dates
(``YYYY-MM-DD``) and whose remaining columns are numeric series. Rows with a
missing or unparseable cell are dropped, never imputed.
"""
from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

OHLC_FIELDS = ("open", "high", "low", "close")


@dataclass
class Panel:
    """T x N block of observations with labels and dates.

    ``dropped_rows`` and ``floored_cells`` record data loss from ingestion
    and Garman-Klass flooring so callers can surface it.
    """

    labels: list[str]
    dates: list[str]
    values: np.ndarray
    dropped_rows: int = 0
    floored_cells: int = 0

    def __post_init__(self):
        self.labels = [str(lab) for lab in self.labels]
        self.dates = [str(d) for d in self.dates]
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise InputError("panel values must be a T x N matrix")
        T, N = self.values.shape
        _check_labels(self.labels)
        if N != len(self.labels):
            raise InputError(f"{len(self.labels)} labels for {N} columns")
        if T != len(self.dates):
            raise InputError(f"{len(self.dates)} dates for {T} rows")
        if N < 2:
            raise InputError(f"need at least 2 variables, got {N}")
        if T < 1:
            raise InputError("panel has no complete rows")
        _check_increasing(self.dates)
        if not np.all(np.isfinite(self.values)):
            raise InputError("panel contains missing or non-finite values")

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def column(self, label: str) -> np.ndarray:
        try:
            return self.values[:, self.labels.index(label)]
        except ValueError:
            raise InputError(f"unknown label {label!r}") from None

    def slice(self, start: int, stop: int) -> "Panel":
        return Panel(self.labels, self.dates[start:stop], self.values[start:stop])

    def select(self, labels) -> "Panel":
        idx = [self.labels.index(lab) for lab in labels]
        return Panel(list(labels), self.dates, self.values[:, idx])


@dataclass
class OhlcPanel:
    labels: list[str]
    dates: list[str]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    dropped_rows: int = field(default=0)

    def __post_init__(self):
        for name in OHLC_FIELDS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        shape = (len(self.dates), len(self.labels))
        _check_labels(self.labels)
        _check_increasing(self.dates)
        for name in OHLC_FIELDS:
            arr = getattr(self, name)
            if arr.shape != shape:
                raise InputError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise InputError(f"{name} prices must be finite and positive")
        if np.any(self.high < np.maximum(self.open, self.close)):
            raise InputError("high below max(open, close)")
        if np.any(self.low > np.minimum(self.open, self.close)):
            raise InputError("low above min(open, close)")


def _check_labels(labels):
    if any(not lab.strip() for lab in labels):
        raise InputError("empty variable label")
    seen = set()
    for lab in labels:
        if lab in seen:
            raise InputError(f"duplicate label {lab!r}")
        seen.add(lab)


def _check_increasing(dates):
    for a, b in zip(dates, dates[1:]):
        if not a < b:
            raise InputError(f"dates not strictly increasing at {a} -> {b}")


def _parse_date(text: str) -> str | None:
    text = text.strip()
    if len(text) != 10:
        return None
    try:
        return _dt.date.fromisoformat(text).isoformat()
    except ValueError:
        return None


def _parse_float(text: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _read_rows(path):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    return header, body


def _parse_body(body, ncols):
    dates, values, dropped = [], [], 0
    for row in body:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != ncols + 1:
            dropped += 1
            continue
        date = _parse_date(row[0])
        cells = [_parse_float(c) for c in row[1:]]
        if date is None or any(c is None for c in cells):
            dropped += 1
            continue
        dates.append(date)
        values.append(cells)
    return dates, values, dropped


def load_panel(path, format: str = "csv") -> Panel:
    """Read a panel CSV.

    Rows with any missing or unparseable cell are dropped; the count is kept
    on ``Panel.dropped_rows``.
    """
    if format != "csv":
        raise InputError(f"unsupported format {format!r}")
    header, body = _read_rows(path)
    labels = header[1:]
    if len(labels) < 2:
        raise InputError(f"need at least 2 variables, found {len(labels)}")
    _check_labels(labels)
    dates, values, dropped = _parse_body(body, len(labels))
    if not dates:
        raise InputError(f"{path} has no complete rows")
    arr = np.array(values, dtype=float).reshape(len(dates), len(labels))
    return Panel(labels, dates, arr, dropped_rows=dropped)


def save_panel(panel: Panel, path) -> None:
    """Write ``panel`` in the format read by :func:`load_panel`.

    Floats are written with ``repr`` so a reload is bit-exact.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *panel.labels])
        for date, row in zip(panel.dates, panel.values):
            writer.writerow([date, *(repr(float(v)) for v in row)])


def load_ohlc(path) -> OhlcPanel:
    """Read an OHLC CSV with columns named ``<label>_open``, ``<label>_high``, ...

    The suffix after the last underscore selects the field, so labels may
    themselves contain underscores.
    """
    header, body = _read_rows(path)
    cols = header[1:]
    layout: dict[str, dict[str, int]] = {}
    for k, name in enumerate(cols):
        label, sep, fld = name.rpartition("_")
        fld = fld.lower()
        if not sep or fld not in OHLC_FIELDS:
            raise InputError(f"OHLC column {name!r} must end in _open/_high/_low/_close")
        slot = layout.setdefault(label, {})
        if fld in slot:
            raise InputError(f"duplicate column {name!r}")
        slot[fld] = k
    labels = list(layout)
    for label, slot in layout.items():
        missing = set(OHLC_FIELDS) - set(slot)
        if missing:
            raise InputError(f"{label}: missing {sorted(missing)}")
    if len(labels) < 2:
        raise InputError(f"need at least 2 variables, found {len(labels)}")
    dates, values, dropped = _parse_body(body, len(cols))
    if not dates:
        raise InputError(f"{path} has no complete rows")
    arr = np.array(values, dtype=float).reshape(len(dates), len(cols))
    fields = {
        fld: arr[:, [layout[lab][fld] for lab in labels]] for fld in OHLC_FIELDS
    }
    return OhlcPanel(labels, dates, dropped_rows=dropped, **fields)


def log_returns(panel: Panel) -> Panel:
    """Continuously compounded returns; output drops the first date."""
    if np.any(panel.values <= 0):
        raise InputError("log returns need strictly positive values")
    if panel.n_obs < 2:
        raise InputError("log returns need at least 2 observations")
    rets = np.diff(np.log(panel.values), axis=0)
    return Panel(panel.labels, panel.dates[1:], rets, dropped_rows=panel.dropped_rows)


def range_volatility(ohlc: OhlcPanel, estimator: str = "parkinson") -> Panel:
    """Daily variance proxy from intraday ranges.

    Parameters
    ----------
    ohlc : OhlcPanel
    estimator : {"parkinson", "garman_klass"}
        Garman-Klass values that come out negative (possible on bars with a
        small range and large open-to-close move) are floored at zero; the
        number of floored cells is stored on the result.
    """
    hl = np.log(ohlc.high / ohlc.low) ** 2
    floored = 0
    if estimator == "parkinson":
        vol = hl / (4.0 * math.log(2.0))
    elif estimator == "garman_klass":
        co = np.log(ohlc.close / ohlc.open) ** 2
        vol = 0.5 * hl - (2.0 * math.log(2.0) - 1.0) * co
        neg = vol < 0
        floored = int(neg.sum())
        vol = np.where(neg, 0.0, vol)
    else:
        raise InputError(f"unknown range estimator {estimator!r}")
    return Panel(ohlc.labels, ohlc.dates, vol,
                 dropped_rows=ohlc.dropped_rows, floored_cells=floored)
