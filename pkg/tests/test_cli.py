import csv
import io
import json
import subprocess
import sys

import pytest

from groupfisher.cli import ConfigError, load_config, main, parse_kv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_metric_json(capsys):
    code, out, _ = run(capsys, "metric", "--model", "corr2d", "--const", "r=0.6,Sigma=1", "--params", "mu=0,sigma=1", "--class", "tsallis:q=0.5")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == 1
    assert data["class"] == {"kind": "tsallis", "q": 0.5, "phi": 1.5}
    assert data["metric"]["g"][0][0] == pytest.approx(1.5 / 0.64, rel=1e-12)
    assert data["metric"]["g"][1][1] == pytest.approx(6.0 / 0.64, rel=1e-12)


def test_metric_both_estimators(capsys):
    code, out, _ = run(capsys, "metric", "--class", "abr:a=0.2,b=0.3", "--estimator", "both")
    data = json.loads(out)
    assert code == 0 and data["max_rel_difference"] < 1e-4
    assert data["hessian"]["g"][1][1] == pytest.approx(3.0, rel=1e-6)


def test_output_is_deterministic(capsys):
    args = ("curvature", "--model", "corr2d", "--const", "r=0.3")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_curvature(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "corr2d", "--const", "r=0.6,Sigma=1", "--class", "tsallis:q=0.5")
    assert code == 0
    assert json.loads(out)["report"]["scalar_curvature"] == pytest.approx(-0.32 / 1.5, rel=1e-6)


def test_divergence_second_density(capsys):
    code, out, _ = run(capsys, "divergence", "--params", "mu=1,sigma=1", "--params2", "mu=0,sigma=1")
    assert code == 0 and json.loads(out)["divergence"] == pytest.approx(0.5, rel=1e-12)


def test_verify_theorem_exit_code(capsys):
    code, out, _ = run(capsys, "verify-theorem", "--class", "abr:a=0.2,b=0.3", "--model", "gauss1d")
    assert code == 0 and json.loads(out)["report"]["pass"]["all"]


def test_verify_theorem_failure_exit_code(monkeypatch, capsys):
    import dataclasses

    import groupfisher.cli as cli

    real = cli.verify_theorem
    monkeypatch.setattr(cli, "verify_theorem", lambda *a, **k: dataclasses.replace(real(*a, **k), curvature_pass=False))
    code, out, _ = run(capsys, "verify-theorem", "--class", "tsallis:q=0.5")
    assert code == 1
    assert json.loads(out)["report"]["pass"] == {"metric": True, "christoffel": True, "ricci": True, "curvature": False, "all": False}


def test_verify_theorem_inapplicable(capsys):
    code, _, err = run(capsys, "verify-theorem", "--class", "tsallis:q=2")
    assert code == 2
    assert json.loads(err)["error"] == "TheoremInapplicableError"


def test_table1_paper_format(capsys):
    code, out, _ = run(capsys, "table1", "--paper-format", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["t_ratio", "q_soft", "q_str"]
    assert rows[1] == ["0", "2", "-inf"]
    assert rows[8] == ["0.75", "1.25", "0.6666"]
    assert out.endswith("\r\n")


def test_table1_json_flags_limit(capsys):
    code, out, _ = run(capsys, "table1", "--format", "json", "--ratios", "0,0.5")
    rows = json.loads(out)["rows"]
    assert rows[0]["limit"] is True and rows[0]["q_str"] is None
    assert rows[1] == {"t_ratio": 0.5, "q_soft": 1.5, "q_str": 0.0, "limit": False}


def test_table1_rejects_bad_ratio(capsys):
    code, _, err = run(capsys, "table1", "--ratios", "1.5")
    assert code == 2 and "T/T0" in json.loads(err)["message"]


def test_cri(capsys):
    code, out, _ = run(capsys, "cri", "--class", "tsallis:q=0.5")
    rep = json.loads(out)["report"]
    assert code == 0 and rep["group_complexity"] == pytest.approx(1.5, rel=1e-10)


def test_cri_precondition(capsys):
    code, _, err = run(capsys, "cri", "--class", "tsallis:q=3")
    assert code == 2
    msg = json.loads(err)
    assert msg["error"] == "DomainError" and "q <= 2" in msg["message"]
    assert err.count("\n") == 1


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--r", "0,0.6", "--curvature")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 2
    assert float(rows[1]["q_soft"]) == pytest.approx(1.36)
    assert float(rows[1]["R_qsoft_corr"]) == pytest.approx(-0.5, abs=1e-6)
    assert float(rows[1]["R_qstr_unc"]) == pytest.approx(-0.32, abs=1e-6)


def test_sweep_grid(capsys):
    code, out, _ = run(capsys, "sweep", "--r", "0:0.9:4", "--format", "json")
    assert [row["r"] for row in json.loads(out)["rows"]] == pytest.approx([0.0, 0.3, 0.6, 0.9])


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('model = "corr2d"\nclass = "tsallis:q=0.5"\n[const]\nr = 0.6\n[quad]\norder = 32\n[fd]\nrichardson = false\n')
    code, out, _ = run(capsys, "metric", "--config", str(cfg))
    data = json.loads(out)
    assert code == 0 and data["model"]["const"]["r"] == 0.6 and data["class"]["q"] == 0.5
    code, out, _ = run(capsys, "metric", "--config", str(cfg), "--class", "boltzmann")
    assert json.loads(out)["class"]["kind"] == "boltzmann"


def test_config_dotted_keys(tmp_path):
    cfg = tmp_path / "dotted.toml"
    cfg.write_text("quad.order = 48\nfd.base_step = 0.002\nparams = \"mu=1,sigma=2\"\n")
    assert load_config(cfg) == {"quad.order": 48, "fd.base_step": 0.002, "params.mu": 1.0, "params.sigma": 2.0}


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[quad]\nordr = 10\n")
    code, _, err = run(capsys, "metric", "--config", str(cfg))
    assert code == 2 and "quad.ordr" in json.loads(err)["message"]


def test_config_invalid_values(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[quad]\norder = 4\n")
    assert run(capsys, "metric", "--config", str(cfg))[0] == 2
    cfg.write_text("not toml [")
    assert run(capsys, "metric", "--config", str(cfg))[0] == 2
    assert run(capsys, "metric", "--config", str(tmp_path / "missing.toml"))[0] == 2


def test_parse_kv():
    assert parse_kv("mu=0, sigma=1.5") == {"mu": 0.0, "sigma": 1.5}
    with pytest.raises(ConfigError):
        parse_kv("mu")
    with pytest.raises(ConfigError):
        parse_kv("mu=abc")


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["metric", "--model", "cauchy"])
    assert info.value.code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "UsageError"


def test_domain_errors(capsys):
    assert run(capsys, "metric", "--params", "mu=0,sigma=-1")[0] == 2
    assert run(capsys, "metric", "--class", "tsallis:q=1")[0] == 2
    assert run(capsys, "metric", "--model", "corr2d", "--const", "r=1.2")[0] == 2


def test_convergence_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "tight.toml"
    cfg.write_text("[quad]\norder = 8\nmax_order = 8\nrel_tol = 1e-15\nabs_tol = 1e-30\n")
    code, _, err = run(capsys, "divergence", "--config", str(cfg), "--class", "tsallis:q=0.5", "--params", "mu=1,sigma=2", "--params2", "mu=0,sigma=0.7")
    assert code == 3 and json.loads(err)["error"] == "ConvergenceError"


def test_output_file(tmp_path, capsys):
    target = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table1", "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_bytes().startswith(b"t_ratio,q_soft,q_str\r\n")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "groupfisher", "table1", "--paper-format"], capture_output=True, text=True)
    assert proc.returncode == 0 and "1.99999" in proc.stdout


def test_metric_boltzmann_gauss1d(capsys):
    code, out, _ = run(capsys, "metric", "--class", "boltzmann", "--model", "gauss1d", "--params", "mu=0,sigma=1")
    g = json.loads(out)["metric"]["g"]
    assert code == 0
    assert g[0][0] == pytest.approx(1.0, rel=1e-12) and g[1][1] == pytest.approx(2.0, rel=1e-12)


def test_curvature_uncorrelated(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "corr2d", "--const", "r=0,Sigma=1", "--params", "mu=0,sigma=1")
    assert code == 0 and json.loads(out)["report"]["scalar_curvature"] == pytest.approx(-0.5, abs=1e-9)
