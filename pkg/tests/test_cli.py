import json

import numpy as np
import pytest

from conftest import make_panel
from spillnet import config as cfgmod
from spillnet.cli import main
from spillnet.ingest import save_panel
from spillnet.var_model import simulate_var

PHI = np.array([[0.5, 0.1, 0.0], [0.2, 0.4, 0.1], [0.0, 0.3, 0.3]])
SIG = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.0]])


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    rng = np.random.default_rng(3)
    path = tmp_path_factory.mktemp("data") / "panel.csv"
    save_panel(make_panel(simulate_var([PHI], SIG, 400, rng), ["x", "y", "z"]), path)
    return path


def base(data_csv, out, *extra):
    return ["--input", str(data_csv), "--lags", "1", "--horizon", "10", "--seed", "1",
            "--out-dir", str(out), *extra]


def write_cfg(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_validate_valid(tmp_path, data_csv):
    cfg = cfgmod.resolve({"input": {"path": str(data_csv)}, "spec": {"lags": 2}, "horizon": 10,
                          "outputs": {"dir": str(tmp_path / "o")}})
    assert cfgmod.validate(cfg) == []
    assert main(["validate", "--config", str(write_cfg(tmp_path, cfg))]) == 0


def test_validate_two_problems(tmp_path):
    cfg = cfgmod.resolve({"spec": {"lags": 0}, "horizon": 10, "outputs": {"dir": str(tmp_path)}})
    problems = cfgmod.validate(cfg)
    assert len(problems) == 2
    assert any("input.path" in p for p in problems) and any("spec.lags" in p for p in problems)
    assert main(["validate", "--config", str(write_cfg(tmp_path, cfg))]) == 2


def test_validate_negative_lambda(tmp_path, data_csv):
    cfg = cfgmod.resolve({"input": {"path": str(data_csv)}, "spec": {"lags": 1}, "horizon": 5,
                          "estimator": "lasso", "lasso": {"lambda": -0.1},
                          "outputs": {"dir": str(tmp_path)}})
    problems = cfgmod.validate(cfg)
    assert len(problems) == 1 and "lambda" in problems[0]


def test_cholesky_without_ordering(tmp_path, data_csv, capsys):
    out = tmp_path / "o"
    assert main(["table", *base(data_csv, out, "--ident", "cholesky")]) == 2
    assert "ordering" in capsys.readouterr().err
    assert not out.exists()


def test_window_too_wide(tmp_path, data_csv, capsys):
    assert main(["roll", *base(data_csv, tmp_path, "--window", "5000")]) == 2
    err = capsys.readouterr().err
    assert "5000" in err and "400" in err


def test_error_categories(tmp_path, data_csv):
    assert main(["table", *base(tmp_path / "nope.csv", tmp_path)]) == 2
    x = np.random.default_rng(0).standard_normal(100)
    path = tmp_path / "sing.csv"
    save_panel(make_panel(np.column_stack([x, x])), path)
    assert main(["table", *base(path, tmp_path / "s", "--window", "50", "--on-failure", "skip")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["table", *base(data_csv, blocker / "sub")]) == 2


def _artifacts(out):
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and p.suffix != ".png"}


def test_run_outputs_and_determinism(tmp_path, data_csv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", *base(data_csv, a)]) == 0
    assert main(["run", *base(data_csv, b)]) == 0
    for name in ("connectedness.csv", "connectedness.json", "model.json", "network.svg",
                 "connectedness.png", "manifest.json"):
        assert (a / name).exists()
    fa, fb = _artifacts(a), _artifacts(b)
    fa.pop("manifest.json"), fb.pop("manifest.json")
    assert fa == fb
    assert (a / "connectedness.png").read_bytes() == (b / "connectedness.png").read_bytes()


def test_manifest_round_trip(tmp_path, data_csv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", *base(data_csv, a, "--select-lag", "--max-lags", "4")]) == 0
    man = json.loads((a / "manifest.json").read_text())
    assert man["tool"] == "spillnet" and man["labels"] == ["x", "y", "z"]
    assert len(man["input_sha256"]) == 64 and man["resolved_lag_order"] >= 1
    assert main(["run", "--config", str(a / "manifest.json"), "--out-dir", str(b)]) == 0
    fa, fb = _artifacts(a), _artifacts(b)
    ma, mb = json.loads(fa.pop("manifest.json")), json.loads(fb.pop("manifest.json"))
    assert fa == fb
    ma["config"]["outputs"].pop("dir"), mb["config"]["outputs"].pop("dir")
    assert ma == mb


def test_roll_with_frames(tmp_path, data_csv):
    out = tmp_path / "r"
    assert main(["roll", *base(data_csv, out, "--window", "200", "--step", "50", "--frames")]) == 0
    n = len(list((out / "windows").glob("*.csv")))
    assert n == 5 and len(list((out / "frames").glob("*.svg"))) == n
    assert (out / "rolling_long.csv").exists()


def test_graph_and_table_reuse(tmp_path, data_csv):
    out = tmp_path / "g"
    assert main(["graph", *base(data_csv, out, "--threshold", "0.01", "--no-png")]) == 0
    for name in ("edges.csv", "network.dot", "network.gexf", "network.svg"):
        assert (out / name).exists()
    assert not (out / "connectedness.png").exists()
    out2 = tmp_path / "g2"
    assert main(["graph", "--table", str(out / "connectedness.json"), "--out-dir", str(out2),
                 "--threshold", "0.01", "--seed", "1"]) == 0
    assert (out2 / "network.svg").read_bytes() == (out / "network.svg").read_bytes()
    assert (out2 / "edges.csv").read_bytes() == (out / "edges.csv").read_bytes()


def test_risk_and_lasso(tmp_path, data_csv):
    out = tmp_path / "k"
    assert main(["risk", *base(data_csv, out, "--mkt", "x", "--tail-p", "0.1",
                                "--estimator", "lasso", "--format", "csv,json")]) == 0
    header = (out / "risk.csv").read_text().splitlines()[0]
    assert header.startswith("label,MES,from_degree,CoVaR,to_degree")
    assert json.loads((out / "model.json").read_text())["info"]["selection"] == "bic"


def test_cholesky_table(tmp_path, data_csv):
    out = tmp_path / "c"
    assert main(["table", *base(data_csv, out, "--ident", "cholesky", "--ordering", "z,x,y",
                                 "--format", "csv")]) == 0
    assert (out / "connectedness.csv").exists() and not (out / "connectedness.json").exists()
    rows = (out / "connectedness.csv").read_text().splitlines()
    assert rows[0] == ",x,y,z,FROM" and rows[-2].startswith("TO,") and rows[-1].startswith("NET,")
