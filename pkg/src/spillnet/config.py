"""Run configuration: defaults, JSON loading, flag overrides, validation."""
from __future__ import annotations

import copy
import json
from pathlib import Path

from .errors import InputError
from .lasso import LassoConfig
from .network.layout import LayoutConfig
from .risk import TailConfig

TRANSFORMS = ("none", "log_returns", "parkinson", "garman_klass")
FORMATS = ("csv", "json")

DEFAULTS = {
    "input": {"path": None, "format": "csv"},
    "transform": "none",
    "spec": {"lags": None, "intercept": True, "select_lag": False, "max_lags": 8,
             "criterion": "bic"},
    "estimator": "ols",
    "lasso": LassoConfig().to_dict(),
    "horizon": None,
    "ident": "generalized",
    "ordering": None,
    "rolling": None,
    "outputs": {"dir": "spillnet_out", "formats": ["csv", "json"], "frames": False,
                "png": True, "total": "index"},
    "viz": {**{k: v for k, v in LayoutConfig().to_dict().items() if k != "seed"}, "enabled": True},
    "risk": None,
    "seed": 0,
}

ROLLING_DEFAULTS = {"window": None, "step": 1, "on_failure": "ridge_fallback", "epsilon": 1e-4}
RISK_DEFAULTS = {"mkt_label": None, "p": 0.05, "min_tail_obs": 20}


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve(raw: dict | None = None) -> dict:
    """Fill defaults into a (possibly partial) config dict."""
    raw = dict(raw or {})
    if "config" in raw and "tool" in raw:  # a manifest from a previous run
        raw = raw["config"]
    cfg = _merge(DEFAULTS, raw)
    if cfg.get("rolling") is not None:
        cfg["rolling"] = _merge(ROLLING_DEFAULTS, cfg["rolling"])
    if cfg.get("risk") is not None:
        cfg["risk"] = _merge(RISK_DEFAULTS, cfg["risk"])
    return cfg


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def validate(cfg: dict) -> list[str]:
    """Every problem with a config, without stopping at the first one."""
    cfg = resolve(cfg)
    problems = []
    path = cfg["input"].get("path")
    if not path:
        problems.append("input.path: missing")
    elif not Path(path).is_file():
        problems.append(f"input.path: no such file {path}")
    if cfg["input"].get("format", "csv") != "csv":
        problems.append(f"input.format: only csv is supported, got {cfg['input']['format']!r}")
    if cfg["transform"] not in TRANSFORMS:
        problems.append(f"transform: expected one of {TRANSFORMS}, got {cfg['transform']!r}")

    spec = cfg["spec"]
    if spec.get("select_lag"):
        mp = spec.get("max_lags")
        if not _is_int(mp) or mp < 1:
            problems.append(f"spec.max_lags: must be a positive integer, got {mp!r}")
        if spec.get("criterion") not in ("aic", "bic"):
            problems.append(f"spec.criterion: expected aic or bic, got {spec.get('criterion')!r}")
    else:
        p = spec.get("lags")
        if p is None:
            problems.append("spec.lags: required (or enable select_lag)")
        elif not _is_int(p) or p < 1:
            problems.append(f"spec.lags: must be a positive integer, got {p!r}")
        elif p > 12:
            problems.append(f"spec.lags: {p} exceeds the bound of 12")

    if cfg["estimator"] not in ("ols", "lasso"):
        problems.append(f"estimator: expected ols or lasso, got {cfg['estimator']!r}")
    if cfg["estimator"] == "lasso":
        try:
            problems.extend(LassoConfig.from_dict(cfg["lasso"]).problems())
        except TypeError as exc:
            problems.append(f"lasso: {exc}")

    H = cfg["horizon"]
    if H is None:
        problems.append("horizon: required")
    elif not _is_int(H) or H < 1:
        problems.append(f"horizon: must be a positive integer, got {H!r}")

    if cfg["ident"] not in ("generalized", "cholesky"):
        problems.append(f"ident: expected generalized or cholesky, got {cfg['ident']!r}")
    elif cfg["ident"] == "cholesky":
        order = cfg["ordering"]
        if not order:
            problems.append("ordering: cholesky identification requires an explicit full ordering")
        elif len(set(order)) != len(order):
            problems.append("ordering: repeated labels")

    roll = cfg["rolling"]
    if roll is not None:
        w = roll.get("window")
        if not _is_int(w) or w < 2:
            problems.append(f"rolling.window: required integer >= 2, got {w!r}")
        if not _is_int(roll.get("step")) or roll["step"] < 1:
            problems.append(f"rolling.step: must be a positive integer, got {roll.get('step')!r}")
        if roll.get("on_failure") not in ("skip", "ridge_fallback"):
            problems.append(f"rolling.on_failure: expected skip or ridge_fallback, got {roll.get('on_failure')!r}")
        eps = roll.get("epsilon")
        if not isinstance(eps, (int, float)) or not eps > 0:
            problems.append(f"rolling.epsilon: must be positive, got {eps!r}")

    out = cfg["outputs"]
    fmts = out.get("formats") or []
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        problems.append(f"outputs.formats: expected a nonempty subset of {FORMATS}, got {fmts!r}")
    if out.get("total") not in ("index", "sum"):
        problems.append(f"outputs.total: expected index or sum, got {out.get('total')!r}")
    odir = Path(out.get("dir") or "")
    if not out.get("dir"):
        problems.append("outputs.dir: missing")
    elif odir.exists() and not odir.is_dir():
        problems.append(f"outputs.dir: {odir} exists and is not a directory")
    else:
        parent = next((p for p in [odir, *odir.parents] if p.exists()), None)
        if parent is None or not parent.is_dir():
            problems.append(f"outputs.dir: cannot create {odir}")

    viz = {k: v for k, v in cfg["viz"].items() if k not in ("enabled", "seed")}
    try:
        problems.extend(LayoutConfig(**viz).problems())
    except TypeError as exc:
        problems.append(f"viz: {exc}")

    risk = cfg["risk"]
    if risk is not None:
        if not risk.get("mkt_label"):
            problems.append("risk.mkt_label: required")
        try:
            problems.extend(TailConfig(risk.get("p"), risk.get("min_tail_obs")).problems())
        except TypeError:
            problems.append("risk.p / risk.min_tail_obs: must be numbers")

    if not _is_int(cfg["seed"]) or cfg["seed"] < 0:
        problems.append(f"seed: must be a nonnegative integer, got {cfg['seed']!r}")
    return problems
