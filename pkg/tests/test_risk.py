import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_panel
from spillnet import TailConfig, covar, mes, risk_vs_connectedness
from spillnet.errors import InputError
from spillnet.fevd import ConnectednessTable
from spillnet.rolling import single_shot
from spillnet.var_model import VarSpec

CFG = TailConfig()


def lower_tail_mean(r, p=0.05):
    return r[r <= np.quantile(r, p)].mean()


def test_mes_self(rng):
    r = rng.standard_normal(5000)
    assert mes(r, r) == pytest.approx(lower_tail_mean(r), abs=1e-15)


def test_mes_sign_flip(rng):
    r = rng.standard_normal(5000)
    assert mes(-r, r) == pytest.approx(-lower_tail_mean(r), abs=1e-15)
    assert mes(-r, r) > 0


def test_mes_independent(rng):
    rm = rng.standard_normal(100_000)
    rj = 0.01 + 0.02 * rng.standard_normal(100_000)
    tail = rm <= np.quantile(rm, 0.05)
    band = 3 * rj.std() / np.sqrt(tail.sum())
    assert abs(mes(rj, rm) - rj.mean()) < band


def test_covar_independent(rng):
    ri = rng.standard_normal(100_000)
    rt = rng.standard_normal(100_000)
    var_u, cv, dcv = covar(rt, ri)
    # seeded run: both 0.002; quantile s.e. with 5000 tail days is about 0.03
    assert abs(cv - var_u) < 0.1
    assert abs(dcv) < 0.1


def test_covar_comonotone(rng):
    r = rng.standard_normal(20_000)
    var_u, cv, _ = covar(r, r)
    breach = r[r <= np.quantile(r, 0.05)]
    assert cv == pytest.approx(-np.quantile(breach, 0.05), abs=1e-15)
    assert cv > var_u


def test_covar_constant_target(rng):
    ri = rng.standard_normal(2000)
    var_u, cv, dcv = covar(np.full(2000, 0.3), ri)
    assert cv == pytest.approx(-0.3) and var_u == pytest.approx(-0.3) and dcv == 0


def test_errors(rng):
    with pytest.raises(InputError):
        mes(np.zeros(10), np.zeros(11))
    with pytest.raises(InputError, match="tail"):
        mes(rng.standard_normal(100), rng.standard_normal(100))
    with pytest.raises(InputError):
        covar(rng.standard_normal(100), rng.standard_normal(100))
    assert TailConfig(p=0.7).problems() and TailConfig(min_tail_obs=3).problems()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.1, 10))
def test_equivariance(seed, shift, scale):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(1000)
    b = 0.5 * a + rng.standard_normal(1000)
    assert mes(b + shift, a) == pytest.approx(mes(b, a) + shift, abs=1e-9)
    assert covar(b + shift, a)[1] == pytest.approx(covar(b, a)[1] - shift, abs=1e-9)
    assert mes(scale * b, scale * a) == pytest.approx(scale * mes(b, a), rel=1e-9, abs=1e-12)
    assert covar(scale * b, scale * a)[1] == pytest.approx(scale * covar(b, a)[1], rel=1e-9, abs=1e-12)
    assert covar(a, a)[1] >= covar(a, a)[0]


def test_report_independent_null():
    rng = np.random.default_rng(8)
    N = 20
    y = rng.standard_normal((4000, N))
    labels = [f"s{k}" for k in range(N)]
    y = np.column_stack([y, y.mean(axis=1)])
    panel = make_panel(y, labels + ["mkt"])
    table = single_shot(panel.select(labels), VarSpec(1), 10).table
    rep = risk_vs_connectedness(panel, table, "mkt")
    band = 2 / np.sqrt(N - 1)
    # seeded run: -0.08 and -0.11 against a band of 0.46
    assert abs(rep.rho_mes_from) < band
    assert abs(rep.rho_covar_to) < band
    assert rep.reliable


def dominant_panel(seed=9, N=6, T=5000):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((T, N))
    y = np.zeros((T, N))
    for t in range(T):
        y[t] = e[t]
        y[t, 1:] += 0.8 * e[t, 0]
        if t:
            y[t, 1:] += 0.3 * y[t - 1, 0]
    labels = [f"v{k}" for k in range(N)]
    return make_panel(np.column_stack([y, y.mean(axis=1)]), labels + ["mkt"]), labels


def test_report_dominant_transmitter():
    panel, labels = dominant_panel()
    table = single_shot(panel.select(labels), VarSpec(1), 10).table
    rep = risk_vs_connectedness(panel, table, "mkt")
    assert int(np.argmax(rep.to_degrees)) == 0
    assert int(np.argmax(rep.covar)) == 0


def test_report_two_rows(rng, tmp_path):
    panel = make_panel(rng.standard_normal((500, 2)), ["a", "b"])
    table = ConnectednessTable(5, "generalized", np.array([[0.9, 0.1], [0.2, 0.8]]), ["a", "b"])
    rep = risk_vs_connectedness(panel, table, "a")
    assert len(rep.labels) == 2 and not rep.reliable
    rep.write(tmp_path / "r.csv", tmp_path / "r.json")
    assert (tmp_path / "r.csv").read_text().splitlines()[0].startswith("label,MES,from_degree,CoVaR,to_degree")
    with pytest.raises(InputError):
        risk_vs_connectedness(panel, table, "zzz")
