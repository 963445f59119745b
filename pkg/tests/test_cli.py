import csv
import io
import json

import numpy as np
import pytest


def fmt(v):
    return repr(float(v))

from factor_lasso import cli
from factor_lasso.simulation import IvDesign, gen_iv, gen_ppfm

from conftest import small_design


@pytest.fixture(scope="module")
def panel_csv(tmp_path_factory):
    data, _ = gen_ppfm(small_design(), np.random.default_rng(0))
    path = tmp_path_factory.mktemp("cli") / "panel.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "time", "y", "d"] + [f"x{j + 1}" for j in range(data.p)])
        for i in range(data.n):
            for t in range(data.T):
                w.writerow([f"u{i}", t, fmt(data.y[i, t]), fmt(data.d[i, t]), *map(fmt, data.x[i, t])])
    return path


@pytest.fixture(scope="module")
def iv_csv(tmp_path_factory):
    data, _ = gen_iv(IvDesign(n=60, p=30, seed=1), np.random.default_rng(0))
    path = tmp_path_factory.mktemp("cli") / "iv.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "y", "d", "z"] + [f"x{j + 1}" for j in range(data.p)])
        for i in range(data.n):
            w.writerow([i, fmt(data.y[i]), fmt(data.d[i]), fmt(data.z[i]), *map(fmt, data.x[i])])
    return path


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_fixed_k():
    cfg = cli.parse_args(["estimate", "--input", "panel.csv", "--k", "3"])
    assert cfg.command == "estimate" and cfg.params["k"] == 3 and cfg.params["input"] == "panel.csv"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["estimate", "--input", "p.csv", "--qn", "3.0"],
        ["estimate", "--input", "p.csv", "--k", "3", "--k-auto"],
        ["estimate", "--input", "p.csv", "--bogus"],
        ["estimate"],
        ["simulate", "--estimators", "factor_lasso,nope"],
        ["simulate", "--design", "iv", "--bootstrap", "10"],
        ["bootstrap", "--input", "p.csv", "--tau", "1.0"],
    ],
)
def test_usage_errors(argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 2 and out == ""


def test_help_documents_formulas(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.parse_args(["estimate", "--help"])
    assert exc.value.code == 0
    text = " ".join(capsys.readouterr().out.split())
    assert "kappa = 2 c0 / sqrt(nT) * Phi^-1(1 - q_n / (2p))" in text
    assert "--k-auto" in text and "--refinements" in text


def test_estimate_json_roundtrip(panel_csv, capsys):
    code, out, _ = run(["estimate", "-i", panel_csv, "--k", "2"], capsys)
    assert code == 0
    doc = json.loads(out)
    for key in ("spec_version", "alpha_hat", "se", "ci", "J_hat", "kappa", "K", "diagnostics", "config", "argv"):
        assert key in doc
    assert list(doc)[:3] == ["spec_version", "command", "alpha_hat"]
    code2, out2, _ = run(["estimate", "-i", panel_csv, "--k", "2"], capsys)
    assert out2 == out
    code3, out3, _ = run(doc["argv"], capsys)
    assert code3 == 0 and out3 == out
    assert cli.parse_args(doc["argv"]).recorded() == doc["config"]


def test_auto_k_roundtrip(panel_csv, capsys):
    _, out, _ = run(["estimate", "-i", panel_csv], capsys)
    doc = json.loads(out)
    assert "--k-auto" in doc["argv"] and doc["config"]["k"] is None
    _, again, _ = run(doc["argv"], capsys)
    assert again == out


def test_output_file_and_csv(panel_csv, tmp_path, capsys):
    target = tmp_path / "res.csv"
    code, out, _ = run(["estimate", "-i", panel_csv, "--k", "2", "--format", "csv", "-o", target], capsys)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(target.open()))
    assert len(rows) == 1 and {"alpha_hat", "ci_low", "ci_high", "spec_version"} <= set(rows[0])


def test_unwritable_output(panel_csv, tmp_path, capsys):
    code, _, err = run(["estimate", "-i", panel_csv, "--k", "2", "-o", tmp_path / "missing" / "x.json"], capsys)
    assert code == 3 and "error" in err


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,time,y,d,x1\n1,1,0,0,0\n1,2,0,0,0\n2,1,0,0,0\n")
    assert run(["estimate", "-i", bad], capsys)[0] == 3
    assert run(["estimate", "-i", tmp_path / "none.csv"], capsys)[0] == 3


def test_numerical_error_code(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    rng = np.random.default_rng(0)
    lines = ["id,time,y,d,x1,x2,x3"]
    for i in range(6):
        for t in range(3):
            lines.append(f"{i},{t},{rng.standard_normal()},{t},{rng.standard_normal()},{rng.standard_normal()},{rng.standard_normal()}")
    path.write_text("\n".join(lines) + "\n")
    with pytest.warns(RuntimeWarning):
        assert run(["estimate", "-i", path, "--k", "1"], capsys)[0] == 4


def test_bootstrap_command(panel_csv, capsys):
    argv = ["bootstrap", "-i", panel_csv, "--k", "2", "--b", "20", "--ksteps", "5", "--seed", "3"]
    code, out, _ = run(argv, capsys)
    doc = json.loads(out)
    assert code == 0 and doc["draws_summary"]["B"] == 20
    for key in ("q_star", "ci", "n_degenerate"):
        assert key in doc
    _, out_threads, _ = run(argv + ["--threads", "2"], capsys)
    assert out_threads == out


def test_iv_and_factors(iv_csv, panel_csv, capsys):
    code, out, _ = run(["iv-estimate", "-i", iv_csv, "--k", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["first_stage_F"] > 0
    code, out, _ = run(["factors", "-i", panel_csv], capsys)
    doc = json.loads(out)
    assert code == 0 and 1 <= doc["K"] <= doc["k_max"]
    assert doc["eigvals"] == sorted(doc["eigvals"], reverse=True)


def test_simulate_csv(capsys):
    argv = ["simulate", "--reps", "2", "--estimators", "factor_lasso,ols_all_x", "--format", "csv"]
    code, out, _ = run(argv, capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["estimator"] for r in rows] == ["factor_lasso", "ols_all_x"]


def test_threads_env_fallback(monkeypatch):
    cfg = cli.parse_args(["simulate"])
    monkeypatch.setenv("FACTOR_LASSO_THREADS", "3")
    assert cli._threads(cfg) == 3
    monkeypatch.delenv("FACTOR_LASSO_THREADS")
    assert cli._threads(cfg) == 1
    assert cli._threads(cli.parse_args(["simulate", "--threads", "2"])) == 2
