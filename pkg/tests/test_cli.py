import json
import math

import numpy as np
import pandas as pd
import pytest

from conftest import make_panel
from pctate.cli import main
from pctate.data import read_csv, read_panel, read_records
from pctate.did import NEVER
from pctate.errors import NonPositiveOutcome, ParseError, SchemaError
from pctate.report import parse_text_numbers


@pytest.fixture
def cross_section(tmp_path):
    rng = np.random.default_rng(21)
    n = 3000
    g = rng.choice(["control", "a", "b"], n, p=[0.4, 0.3, 0.3])
    x = rng.normal(size=n)
    tau = {"control": 0.0, "a": math.log(1.3), "b": math.log(0.9)}
    y = np.exp(1 + 0.5 * x + np.array([tau[v] for v in g]) + rng.normal(0, 0.5, n))
    path = tmp_path / "cs.csv"
    pd.DataFrame({"y": y, "group": g, "x": x}).to_csv(path, index=False)
    w = np.array([np.mean(g == "a"), np.mean(g == "b")])
    w = w / w.sum()
    return path, float(w @ np.array([0.3, -0.1]))


def panel_csv(path, panel):
    cohort = ["" if not math.isfinite(c) else str(int(c)) for c in panel.cohort]
    pd.DataFrame({"unit": panel.unit, "time": panel.time, "cohort": cohort, "y": panel.y}).to_csv(path, index=False)


def test_read_csv_valid_and_nonpositive(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("y,g\n1,a\n2,b\n0,a\n4,control\n5,a\n", encoding="utf-8")
    with pytest.raises(NonPositiveOutcome) as info:
        read_csv(p, ["y", "g"], outcome="y")
    assert info.value.rows == [3]
    p.write_text("y,g\n1,a\n2,b\n3,a\n4,control\n5,a\n", encoding="utf-8")
    assert len(read_records(p, "y", "g")) == 5
    with pytest.raises(SchemaError, match="nope"):
        read_csv(p, ["y", "nope"])
    p.write_text("y,g\n1,a\nabc,b\n", encoding="utf-8")
    with pytest.raises(ParseError, match="row"):
        read_csv(p, ["y"], outcome="y")


def test_blank_cohort_is_never(tmp_path):
    panel = make_panel(0, n_units=12, periods=4, cohorts=(3,))
    p = tmp_path / "p.csv"
    panel_csv(p, panel)
    back = read_panel(p, "unit", "time", "cohort", "y")
    assert np.sum(back.cohort == NEVER) == np.sum(panel.cohort == NEVER)
    np.testing.assert_allclose(back.y, panel.y, rtol=1e-15)


def test_estimate_json_and_text_agree(cross_section, tmp_path, capsys):
    path, rho_bar = cross_section
    out = tmp_path / "rep.json"
    assert main(["estimate", str(path), "--covariates", "x", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["scaled_by_100"] is True
    row = doc["rows"][0]
    for key in ("tau_bar", "rho_a", "rho_b", "rho_c", "rho_d", "ci_tau", "ci_a", "ci_rho", "z_tau", "z_a", "z_mu"):
        assert key in row
    text = out.with_suffix(".txt").read_text()
    assert text == capsys.readouterr().out
    assert "multiplied by 100" in text
    expected = [row["n_obs"]]
    for k in ("tau_bar", "rho_a", "rho_b", "rho_c", "rho_d"):
        expected.append(row[k])
    for k in ("ci_tau", "ci_a", "ci_rho"):
        expected.extend(row[k])
    expected += [row["z_tau"], row["z_mu"]]
    assert parse_text_numbers(text) == expected
    # known-DGP recovery: SE of rho_c from the interval width
    se = (row["ci_rho"][1] - row["ci_rho"][0]) / (2 * 1.959963984540054)
    assert abs(row["rho_c"] - 100 * rho_bar) <= 4 * se


def test_homogeneous_report_omits_rho_a(tmp_path, capsys):
    rng = np.random.default_rng(2)
    n = 200
    g = np.where(rng.random(n) < 0.5, "control", "t")
    y = np.exp(rng.normal(size=n) + 0.1 * (g == "t"))
    p = tmp_path / "h.csv"
    pd.DataFrame({"y": y, "group": g}).to_csv(p, index=False)
    out = tmp_path / "h.json"
    assert main(["estimate", str(p), "-o", str(out)]) == 0
    row = json.loads(out.read_text())["rows"][0]
    assert row["rho_a"] is None and row["ci_a"] is None
    assert any("rho_a equals rho_b" in n for n in row["notes"])
    assert row["z_mu"] == pytest.approx(row["z_tau"], rel=1e-11)


def test_config_precedence(cross_section, tmp_path):
    path, _ = cross_section
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"input": str(path), "covariates": ["x"], "alpha": 0.1}))
    out = tmp_path / "r.json"
    assert main(["estimate", "--config", str(cfg), "-o", str(out)]) == 0
    assert json.loads(out.read_text())["alpha"] == 0.1
    assert main(["estimate", "--config", str(cfg), "--alpha", "0.2", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["alpha"] == 0.2


def test_bad_config_exit_2(cross_section, tmp_path, capsys):
    path, _ = cross_section
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert main(["estimate", str(path), "--config", str(cfg)]) == 2
    assert "SchemaError" in capsys.readouterr().err
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["estimate", str(path), "--config", str(cfg)]) == 2
    assert main(["estimate", str(path), "--alpha", "7"]) == 2
    assert main(["estimate", str(path), "--vcov", "HC9"]) == 2


def test_input_errors_exit_2(tmp_path, capsys):
    p = tmp_path / "z.csv"
    p.write_text("y,group\n1,a\n2,control\n0,a\n", encoding="utf-8")
    assert main(["estimate", str(p)]) == 2
    assert "row" in capsys.readouterr().err
    assert main(["estimate", str(tmp_path / "missing.csv")]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    p = tmp_path / "s.csv"
    p.write_text("y,group,x\n1,a,1\n2,control,1\n3,a,1\n4,control,1\n", encoding="utf-8")
    assert main(["estimate", str(p), "--covariates", "x"]) == 3
    assert "SingularDesign" in capsys.readouterr().err


def test_did_command(tmp_path, capsys):
    panel = make_panel(8, n_units=60, periods=6, cohorts=(3, 5))
    p = tmp_path / "panel.csv"
    panel_csv(p, panel)
    out = tmp_path / "did.json"
    assert main(["did", str(p), "--window", "-6", "3", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    panels = [r["panel"] for r in doc["rows"]]
    assert panels[0] == "All Treated Units"
    assert {"Cohort", "Event Time", "Calendar Year"} <= set(panels)
    text = capsys.readouterr().out
    for name in ("All Treated Units:", "Cohort:", "Event Time:", "Calendar Year:"):
        assert name in text


def test_did_without_controls_exit_2(tmp_path):
    panel = make_panel(9, n_units=20, periods=5, cohorts=(3, 4))
    frame = pd.DataFrame({"unit": panel.unit, "time": panel.time, "cohort": 3, "y": panel.y})
    p = tmp_path / "nc.csv"
    frame.to_csv(p, index=False)
    assert main(["did", str(p)]) == 2


def test_simulate_byte_identical(tmp_path):
    args = ["simulate", "--n-grid", "50", "100", "--reps", "6", "--seed", "11"]
    assert main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--output-dir", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ("simulation.csv", "simulation.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "simulation.csv").read_text().splitlines()[0]
    assert header.split(",")[-3:] == ["rej_z_tau", "rej_z_mu", "redraws"]


def test_simulate_reps_one(tmp_path):
    assert main(["simulate", "--n-grid", "50", "--reps", "1", "--output-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "simulation.json").read_text())
    r = doc["rows"][0]
    assert r["rej_z_tau"] in (0.0, 100.0) and r["rej_z_mu"] in (0.0, 100.0)
