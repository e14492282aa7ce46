from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest
from click.testing import CliRunner

from jfp.cli import cli, main
from jfp.mittag_leffler import ml_solution


def run(*args):
    res = CliRunner().invoke(cli, list(args), catch_exceptions=False)
    assert res.exit_code == 0, res.output
    return res.output


def table(text):
    return list(csv.reader(io.StringIO(text)))


def test_fracmat_meets_delta(tmp_path):
    meta = tmp_path / "m.json"
    out = run("fracmat", "--mu", "1/2", "--p", "2", "--N", "40", "--meta", str(meta))
    rows = table(out)
    assert rows[0] == ["row", "col", "value"]
    info = json.loads(meta.read_text())
    assert info["error_estimate"] <= 1e-16
    assert info["algorithm"] == "alg2"
    assert info["precision"] > 53
    # column 0 of I^(1/2) on Legendre in sqrt((1+x)/2): sqrt(2/pi) in rows 0 and 1
    first = [r for r in rows[1:] if r[1] == "0"]
    assert [r[0] for r in first] == ["0", "1"]
    assert float(first[0][2]) == pytest.approx(np.sqrt(2 / np.pi), rel=1e-15)


def test_fracmat_json():
    doc = json.loads(run("fracmat", "--mu", "1/3", "--p", "3", "--N", "6", "--format", "json"))
    assert doc["k_star"] == 1
    assert len(doc["columns"]) == 6


def test_solve_auto_builtin():
    rows = table(run("solve", "examples/mittag1.toml", "--N", "auto", "--grid", "-1:0.25:1"))
    assert rows[0] == ["x", "u", "exact", "error"]
    assert len(rows) == 10
    assert max(float(r[3]) for r in rows[1:]) < 1e-13


def test_solve_fixed_N_json(tmp_path):
    doc = json.loads(run("solve", "mittag1", "--N", "30", "--format", "json", "--grid", "0:0.5:1"))
    assert doc["N"] == 30
    assert len(doc["coefficients"]) == 30
    np.testing.assert_allclose([float(v) for v in doc["u"]], ml_solution("1/2", 1, 1.0, np.array([0, 0.5, 1])),
                               atol=1e-13)


def test_solve_bordered():
    rows = table(run("solve", "bagley_torvik_caputo", "--N", "60", "--grid", "-1:1:1"))
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)
    assert float(rows[-1][1]) == pytest.approx(0.0, abs=1e-12)


def test_ml_table():
    rows = table(run("ml", "--alpha", "1", "--beta", "1", "--z", "-2:1:0"))
    assert rows[0] == ["z", "E"]
    np.testing.assert_allclose([float(r[1]) for r in rows[1:]], np.exp([-2.0, -1.0, 0.0]), rtol=1e-15)


def test_heatwave_small(tmp_path):
    meta = tmp_path / "h.json"
    rows = table(run("heatwave", "--mu", "1", "--nx", "5", "--nt", "3", "--T", "0.5", "--meta", str(meta)))
    assert len(rows) == 4
    assert len(rows[0]) == 6
    assert json.loads(meta.read_text())["N_f"] == 29
    # t = 0 reproduces the datum
    x = np.array([float(v) for v in rows[0][1:]])
    f = np.exp(-np.cos(2 * x) + np.sin(x) / 2) - 2 * np.sin(np.sin(x))
    np.testing.assert_allclose([float(v) for v in rows[1][1:]], f, atol=1e-13)


def test_bench_sumspace_small():
    rows = table(run("bench-sumspace", "--lambdas", "1", "--N", "200", "--jfp-N", "40"))
    assert len(rows) == 2
    rec = dict(zip(rows[0], rows[1]))
    assert float(rec["jfp_max_error"]) < 1e-13


def test_convergence_table():
    rows = table(run("convergence", "--problems", "mittag1", "--Ns", "10,30", "--grid", "-1:0.5:1"))
    assert rows[0] == ["problem", "N", "reference", "max_error", "tail"]
    errs = [float(r[3]) for r in rows[1:]]
    assert errs[1] < errs[0]
    assert errs[1] < 1e-12


@pytest.mark.parametrize("args", [
    ["fracmat", "--mu", "0.5", "--N", "10"],
    ["fracmat", "--mu", "1/2", "--N", "10", "--delta", "0.5"],
    ["solve", "/nonexistent/problem.toml"],
    ["solve", "mittag1", "--grid", "a:b"],
    ["heatwave", "--mu", "5/2"],
    ["ml", "--alpha", "0"],
])
def test_configuration_errors_exit_1(args):
    assert main(args) == 1


def test_success_exit_0(capsys):
    assert main(["ml", "--z", "0:1:1"]) == 0
    assert main(["--version"]) == 0


def test_irrational_flag_accepted():
    out = run("fracmat", "--mu", "1/pi", "--p", "pi", "--N", "5", "--irrational")
    assert len(table(out)) > 1


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run("solve", "mittag1_third", "--N", "40", "-o", str(path))
    assert a.read_bytes() == b.read_bytes()
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    for path in (c, d):
        run("fracmat", "--mu", "1/2", "--p", "2", "--N", "30", "-o", str(path))
    assert c.read_bytes() == d.read_bytes()


def test_nonconvergence_exit_2(monkeypatch):
    import jfp.mittag_leffler as ml

    monkeypatch.setattr(ml, "MAX_BITS", 60)
    assert main(["ml", "--alpha", "3/2", "--beta", "1/3", "--z", "-5:1:-5"]) == 2


def test_internal_error_exit_3(monkeypatch):
    import jfp.cli as jcli

    def boom(*a, **k):
        raise KeyError("unexpected")

    monkeypatch.setattr(jcli, "ml_eval", boom)
    assert main(["ml", "--z", "0:1:0"]) == 3
