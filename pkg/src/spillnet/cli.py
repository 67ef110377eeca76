"""Command-line interface.

Subcommands: run, table, roll, graph, risk, validate. Each reads an optional
JSON config (``--config``) and lets flags override individual fields.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import config as cfgmod
from . import connectedness as cx
from .errors import EstimationError, InputError, NumericalError, OutputError, SpillnetError
from .fevd import ConnectednessTable
from .ingest import load_ohlc, load_panel, log_returns, range_volatility
from .lasso import LassoConfig
from .network import LayoutConfig, anchor_sequence, export_graph, layout, render_svg
from .risk import TailConfig, risk_vs_connectedness
from .rolling import RollingConfig, export as export_rolling, roll, single_shot
from .var_model import VarSpec, select_lag

logger = logging.getLogger("spillnet")

GRAPH_SUFFIX = {"edge_csv": "edges.csv", "dot": "network.dot", "gexf": "network.gexf"}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_input(cfg):
    path = cfg["input"]["path"]
    transform = cfg["transform"]
    if transform in ("parkinson", "garman_klass"):
        return range_volatility(load_ohlc(path), transform)
    panel = load_panel(path, cfg["input"].get("format", "csv"))
    if transform == "log_returns":
        panel = log_returns(panel)
    return panel


def _raise_failure(res):
    if res.failure is None:
        return
    if res.failure.startswith("numerical"):
        raise NumericalError(res.failure)
    raise EstimationError(res.failure)


def _layout_config(cfg):
    viz = {k: v for k, v in cfg["viz"].items() if k not in ("enabled", "seed")}
    return LayoutConfig(**viz, seed=cfg["seed"])


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def execute(cfg: dict, mode: str = "run") -> dict:
    """Run the pipeline for ``mode`` and return the manifest dict.

    Raises SpillnetError subclasses; the CLI maps them to exit statuses.
    """
    cfg = cfgmod.resolve(cfg)
    if mode == "roll" and cfg["rolling"] is None:
        raise InputError("roll needs a window width (--window)")
    if mode == "risk" and cfg["risk"] is None:
        raise InputError("risk needs a market label (--mkt)")
    problems = cfgmod.validate(cfg)
    if problems:
        raise InputError("invalid configuration:\n  " + "\n  ".join(problems))

    out = Path(cfg["outputs"]["dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from exc
    fmts = set(cfg["outputs"]["formats"])
    artifacts: list[str] = []
    fallbacks: list[dict] = []

    panel = _load_input(cfg)
    spec_cfg = cfg["spec"]
    if spec_cfg["select_lag"]:
        p = select_lag(panel, spec_cfg["max_lags"], spec_cfg["criterion"], spec_cfg["intercept"])
    else:
        p = spec_cfg["lags"]
    spec = VarSpec(p, spec_cfg["intercept"])
    lasso_cfg = LassoConfig.from_dict(cfg["lasso"]) if cfg["estimator"] == "lasso" else None
    common = dict(horizon=cfg["horizon"], estimator=cfg["estimator"], lasso=lasso_cfg,
                  identification=cfg["ident"], ordering=cfg["ordering"])
    roll_cfg = cfg["rolling"]
    on_failure = roll_cfg["on_failure"] if roll_cfg else "ridge_fallback"
    epsilon = roll_cfg["epsilon"] if roll_cfg else 1e-4
    lcfg = _layout_config(cfg)

    def emit(name):
        artifacts.append(name)
        return out / name

    rep = None
    if mode != "roll" and not (mode == "run" and roll_cfg):
        res = single_shot(panel, spec, on_failure=on_failure, epsilon=epsilon, **common)
        _raise_failure(res)
        if res.fallback:
            fallbacks.append({"scope": "full_sample", "reason": res.fallback})
        rep = res.report
        if "csv" in fmts:
            cx.write_table_csv(rep, emit("connectedness.csv"), cfg["outputs"]["total"])
        if "json" in fmts:
            rep.to_json(emit("connectedness.json"))
            res.model.to_json(emit("model.json"))
        if cfg["outputs"]["png"]:
            from .plotting import table_heatmap
            table_heatmap(rep, emit("connectedness.png"))
        if mode in ("run", "graph") and cfg["viz"]["enabled"]:
            render_svg(layout(rep.table, lcfg), emit("network.svg"))
        if mode == "graph":
            thr = cfg["viz"]["threshold"] or 0.0
            for fmt, name in GRAPH_SUFFIX.items():
                export_graph(rep.table, emit(name), fmt, thr)

    if mode == "roll" or (mode == "run" and roll_cfg):
        rc = RollingConfig(window=roll_cfg["window"], step=roll_cfg["step"], spec=spec,
                           on_failure=on_failure, epsilon=epsilon, **common)
        series = roll(panel, rc)
        export_rolling(series, out)
        artifacts += ["rolling_long.csv", "windows/", "rolling.json"]
        fallbacks += [{"scope": d, "reason": r} for d, r in series.fallbacks]
        if cfg["outputs"]["frames"] and cfg["viz"]["enabled"]:
            frames_dir = out / "frames"
            frames_dir.mkdir(exist_ok=True)
            for k, frame in enumerate(anchor_sequence(series, lcfg)):
                render_svg(frame, frames_dir / f"frame_{k:05d}.svg")
            artifacts.append("frames/")

    if cfg["risk"] is not None and mode in ("run", "risk"):
        if rep is None:
            res = single_shot(panel, spec, on_failure=on_failure, epsilon=epsilon, **common)
            _raise_failure(res)
            rep = res.report
        rk = cfg["risk"]
        rr = risk_vs_connectedness(panel, rep.table, rk["mkt_label"],
                                   TailConfig(rk["p"], rk["min_tail_obs"]))
        rr.write(emit("risk.csv") if "csv" in fmts else None,
                 emit("risk.json") if "json" in fmts else None)

    manifest_cfg = copy.deepcopy(cfg)
    manifest = {
        "tool": "spillnet",
        "version": __version__,
        "mode": mode,
        "config": manifest_cfg,
        "resolved_lag_order": p,
        "input_sha256": _sha256(cfg["input"]["path"]),
        "n_obs": panel.n_obs,
        "labels": panel.labels,
        "dropped_rows": panel.dropped_rows,
        "floored_cells": panel.floored_cells,
        "fallbacks": fallbacks,
        "artifacts": sorted(artifacts),
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def _number_or_auto(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file (a previous manifest.json also works)")
    sp.add_argument("--input", help="panel CSV (or OHLC CSV for range transforms)")
    sp.add_argument("--transform", choices=cfgmod.TRANSFORMS)
    sp.add_argument("--lags", type=int, help="VAR lag order p")
    sp.add_argument("--no-intercept", action="store_true", default=None)
    sp.add_argument("--select-lag", action="store_true", default=None)
    sp.add_argument("--max-lags", type=int)
    sp.add_argument("--criterion", choices=("aic", "bic"))
    sp.add_argument("--estimator", choices=("ols", "lasso"))
    sp.add_argument("--lambda", dest="lam", type=_number_or_auto)
    sp.add_argument("--selection", choices=("bic", "cv"))
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--ident", choices=("generalized", "cholesky"))
    sp.add_argument("--ordering", help="comma-separated labels, most exogenous first")
    sp.add_argument("--window", type=int)
    sp.add_argument("--step", type=int)
    sp.add_argument("--on-failure", choices=("skip", "ridge_fallback"))
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--mkt", help="market label for MES/CoVaR")
    sp.add_argument("--tail-p", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir")
    sp.add_argument("--format", action="append", help="csv and/or json (repeat or comma-separate)")
    sp.add_argument("--frames", action="store_true", default=None,
                    help="emit one SVG per rolling window")
    sp.add_argument("--no-png", action="store_true", default=None)


def config_from_args(args) -> dict:
    raw = cfgmod.load(args.config) if args.config else {}
    cfg = cfgmod.resolve(raw)

    def put(section, key, value):
        if value is not None:
            if section is None:
                cfg[key] = value
            else:
                if cfg.get(section) is None:
                    cfg[section] = {}
                cfg[section][key] = value

    put("input", "path", args.input)
    put(None, "transform", args.transform)
    put("spec", "lags", args.lags)
    if args.no_intercept:
        put("spec", "intercept", False)
    put("spec", "select_lag", args.select_lag)
    put("spec", "max_lags", args.max_lags)
    put("spec", "criterion", args.criterion)
    put(None, "estimator", args.estimator)
    put("lasso", "lambda", args.lam)
    put("lasso", "selection", args.selection)
    put(None, "horizon", args.horizon)
    put(None, "ident", args.ident)
    if args.ordering is not None:
        cfg["ordering"] = [s.strip() for s in args.ordering.split(",") if s.strip()]
    put("rolling", "window", args.window)
    if cfg.get("rolling") is not None:
        put("rolling", "step", args.step)
        put("rolling", "on_failure", args.on_failure)
    put("viz", "threshold", args.threshold)
    put("risk", "mkt_label", args.mkt)
    if cfg.get("risk") is not None:
        put("risk", "p", args.tail_p)
    put(None, "seed", args.seed)
    put("outputs", "dir", args.out_dir)
    if args.format:
        cfg["outputs"]["formats"] = [f.strip() for item in args.format for f in item.split(",")
                                     if f.strip()]
    put("outputs", "frames", args.frames)
    if args.no_png:
        put("outputs", "png", False)
    return cfgmod.resolve(cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spillnet",
                                     description="Variance-decomposition connectedness networks.")
    parser.add_argument("--version", action="version", version=f"spillnet {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "full pipeline from a config file",
        "table": "one-shot connectedness table",
        "roll": "rolling-window connectedness",
        "graph": "network layout, SVG and graph exports",
        "risk": "MES/CoVaR next to from-/to-degrees",
        "validate": "check a config and list every problem",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        _add_common(sp)
        if name == "graph":
            sp.add_argument("--table", help="connectedness JSON from a previous run (skips estimation)")
    return parser


def _graph_from_table(args, cfg):
    table = ConnectednessTable.from_json(args.table)
    out = Path(cfg["outputs"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    lcfg = _layout_config(cfg)
    problems = lcfg.problems()
    if problems:
        raise InputError("; ".join(problems))
    render_svg(layout(table, lcfg), out / "network.svg")
    thr = cfg["viz"]["threshold"] or 0.0
    for fmt, name in GRAPH_SUFFIX.items():
        export_graph(table, out / name, fmt, thr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "validate":
            problems = cfgmod.validate(cfg)
            for line in problems:
                print(line)
            if not problems:
                print("config OK")
            return 0 if not problems else InputError.exit_code
        if args.command == "graph" and args.table:
            _graph_from_table(args, cfg)
            return 0
        manifest = execute(cfg, args.command)
        print(f"wrote {len(manifest['artifacts'])} artifacts to {cfg['outputs']['dir']}")
        return 0
    except SpillnetError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return OutputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
