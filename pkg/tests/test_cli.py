import csv
import json

import pytest

from pulseglide.cli import LOCUS_HEADER, RCRIT_HEADER, TRAJECTORY_HEADER, main


def _header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_equilibrium_json(tmp_path, capsys):
    assert main(["equilibrium", "--speed", "15"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["x2_0_N"] == pytest.approx(230.88, rel=5e-3)
    assert doc["weight_c_g_per_m"] == pytest.approx(0.0383, rel=1e-3)
    assert doc["steady_cost"] == pytest.approx(-0.2153, abs=1e-4)


def test_vcrit_prints_single_number(capsys):
    assert main(["vcrit"]) == 0
    assert 33.0 <= json.loads(capsys.readouterr().out) <= 34.5


def test_locus_all_unstable_at_35(tmp_path):
    out, svg = tmp_path / "locus.csv", tmp_path / "locus.svg"
    args = ["locus", "--speed", "35", "--r-min", "1e-6", "--r-max", "1e2", "--points", "50"]
    assert main(args + ["--out", str(out), "--svg", str(svg)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50 and {r["class"] for r in rows} == {"Unstable"}
    assert _header(out) == LOCUS_HEADER
    assert svg.read_text().startswith("<svg")


def test_rcrit_sweep_csv(tmp_path):
    out = tmp_path / "rc.csv"
    assert main(["rcrit", "--v-min", "14", "--v-max", "16", "--step", "1", "--out", str(out)]) == 0
    assert _header(out) == RCRIT_HEADER
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["v_mps"]) for r in rows] == [14.0, 15.0, 16.0]
    assert float(rows[1]["period_s"]) == pytest.approx(159.1, abs=0.1)


def test_rcrit_rejects_bad_step():
    assert main(["rcrit", "--step", "0"]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fly"],
        ["equilibrium"],
        ["equilibrium", "--speed", "fast"],
        ["optimize", "--speed", "15", "--r", "3e-4", "--harmonics", "0"],
        ["equilibrium", "--speed", "-3"],
    ],
)
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_unknown_config_key_exit_1(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"vehicle": {"mass": 1500}}))
    assert main(["equilibrium", "--speed", "15", "--config", str(cfg)]) == 1
    assert "mass" in capsys.readouterr().err


def test_missing_config_exit_1(tmp_path):
    assert main(["equilibrium", "--speed", "15", "--config", str(tmp_path / "none.json")]) == 1


def test_config_changes_result(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"vehicle": {"mass_kg": 1000.0}}))
    assert main(["equilibrium", "--speed", "15", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["x2_0_N"] == pytest.approx(0.5 * 1.2 * 0.33 * 2 * 225 + 0.009 * 1000 * 9.81)


def test_numerical_failure_exit_2(capsys):
    assert main(["vcrit", "--v-lo", "35", "--v-hi", "40"]) == 2
    assert "error" in capsys.readouterr().err


def test_unwritable_svg_exit_2(tmp_path):
    target = tmp_path / "missing" / "plot.svg"
    assert main(["locus", "--speed", "25", "--points", "10", "--out", str(tmp_path / "l.csv"), "--svg", str(target)]) == 2
    assert not target.exists()


def test_simulate_rejects_bad_decision(tmp_path):
    doc = tmp_path / "d.json"
    doc.write_text(json.dumps({"x1_0": 15, "x2_0": 230, "omega": 0.1, "a": [0], "b": [1], "phase": 2}))
    assert main(["simulate", "--input", str(doc)]) == 1


def test_simulate_bare_decision(tmp_path):
    doc, out = tmp_path / "d.json", tmp_path / "t.csv"
    doc.write_text(json.dumps({"x1_0": 15.0, "x2_0": 230.8, "omega": 0.05, "a": [0.0], "b": [2.0]}))
    assert main(["simulate", "--input", str(doc), "--steps", "64", "--out", str(out)]) == 0
    assert _header(out) == TRAJECTORY_HEADER
    assert len(out.read_text().splitlines()) == 66


@pytest.fixture(scope="module")
def optimize_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("opt")
    paths = {k: d / f"result.{k}" for k in ("json", "csv", "svg")}
    argv = ["optimize", "--speed", "15", "--r", "3e-4", "--harmonics", "1", "--x1-0", "14.7"]
    for k, p in paths.items():
        argv += [f"--{k}", str(p)]
    assert main(argv) == 0
    return d, paths


def test_optimize_outputs(optimize_run):
    _, paths = optimize_run
    doc = json.loads(paths["json"].read_text())
    assert set(doc) >= {"decision", "cost", "residuals", "convergence", "steady_cost", "continuation"}
    assert doc["convergence"]["converged"] is True
    assert doc["cost"]["J"] < doc["steady_cost"]
    assert set(doc["decision"]) == {"x1_0", "x2_0", "omega", "a", "b"}
    assert _header(paths["csv"]) == TRAJECTORY_HEADER
    assert len(paths["csv"].read_text().splitlines()) == doc["steps"] + 2


def test_simulate_round_trip_is_bit_identical(optimize_run):
    d, paths = optimize_run
    sim = d / "sim.csv"
    assert main(["simulate", "--input", str(paths["json"]), "--out", str(sim)]) == 0
    assert sim.read_bytes() == paths["csv"].read_bytes()
