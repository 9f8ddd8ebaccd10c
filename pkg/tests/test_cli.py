"""Command-line interface: outputs, exit codes and determinism."""

import csv
import io
import json
import subprocess
import sys

import pytest

from asyncmdi import cli
from asyncmdi.exceptions import NumericError

SOURCE = {"mu": 0.45, "nu": 0.03, "p_mu": 0.25, "p_nu": 0.2, "p_o": 0.5, "p_ohat": 0.05}
DOC = {
    "source_a": SOURCE,
    "source_b": SOURCE,
    "matching": {"mode": "arbitrary", "sigma": 0.0872664626, "quad_nodes": 64, "T_c": 2.5e-8},
    "optimizer": {"population": 8, "generations": 3},
    "run": {"N": 1e12, "seed": 17, "distance": {"start": 100, "stop": 160, "step": 30}, "N_sim": 20000},
}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(DOC), encoding="utf-8")
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_scan_output(config, capsys):
    code, out, _ = run(["scan", "--config", config], capsys)
    assert code == 0
    table = rows(out)
    assert [float(r["distance_km"]) for r in table] == [100.0, 130.0, 160.0]
    assert set(cli.SCAN_COLUMNS + cli.PARAM_COLUMNS) == set(table[0])
    assert "\r" not in out
    assert all(r["feasible"] == "true" for r in table)


def test_scan_diagnostics_and_no_optimize(config, capsys):
    code, out, _ = run(["scan", "--config", config, "--no-optimize", "--emit-diagnostics",
                        "--distance", "100:100:10"], capsys)
    assert code == 0
    row = rows(out)[0]
    assert float(row["mu_a"]) == SOURCE["mu"]
    assert "diag_phi11_z_upper" in row and "diag_plob_with_detector" in row


def test_empty_range_header_only(config, capsys):
    code, out, _ = run(["scan", "--config", config, "--distance", "200:100:10"], capsys)
    assert code == 0
    assert out.count("\n") == 1 and out.startswith("distance_km,")


def test_infeasible_exit(config, capsys):
    code, out, _ = run(["scan", "--config", config, "--distance", "2000:2000:10", "--no-optimize"], capsys)
    assert code == 2
    assert rows(out)[0]["feasible"] == "false"


@pytest.mark.parametrize(
    "argv",
    [
        ["scan", "--config", "does-not-exist.json"],
        ["scan"],
        ["hom", "--delta-v", "1:2"],
        ["drift", "--tc", "1e-6:2e-6:1e-6", "--delta-v", "a,b"],
    ],
)
def test_config_errors(argv, capsys):
    assert run(argv, capsys)[0] == 3


def test_bad_scenario_value(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**DOC, "channel": {"p_d": 2.0}}), encoding="utf-8")
    code, _, err = run(["scan", "--config", str(path)], capsys)
    assert code == 3 and "configuration error" in err


def test_numeric_failure(config, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericError("forced")

    monkeypatch.setattr(cli, "evaluate", boom)
    assert run(["scan", "--config", config, "--no-optimize"], capsys)[0] == 4


def test_optimize_json(config, capsys):
    code, out, _ = run(["optimize", "--config", config, "--distance", "120"], capsys)
    report = json.loads(out)
    assert code == 0 and report["feasible"] and report["distance_km"] == 120.0
    assert report["source_a"]["mu"] > report["source_a"]["nu"]


def test_mc_tiny_run(config, capsys):
    code, out, err = run(["mc", "--config", config, "--n-sim", "1000"], capsys)
    assert code == 0
    assert out.startswith("quantity,empirical,analytic,z_score\n")
    assert "checks within" in err


def test_hom_rows(capsys):
    code, out, _ = run(["hom", "--delta-v", "0:100000:50000"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 3
    assert float(table[0]["error_rate"]) == pytest.approx(0.25)
    assert float(table[2]["error_rate"]) == pytest.approx(0.297745751406263, rel=1e-12)


def test_drift_rows(capsys):
    code, out, _ = run(["drift", "--tc", "1e-6:1e-6:1e-6", "--delta-v", "100000"], capsys)
    row = rows(out)[0]
    assert code == 0
    assert float(row["intrinsic_error"]) == pytest.approx(0.0245, abs=5e-5)
    assert float(row["sigma_total_rad"]) > float(row["sigma_laser_rad"])


@pytest.mark.parametrize(
    "argv",
    [
        ["scan", "--config", "{cfg}"],
        ["optimize", "--config", "{cfg}"],
        ["mc", "--config", "{cfg}"],
        ["hom", "--delta-v", "0:250000:12500"],
        ["drift", "--tc", "1e-7:5e-5:1e-6", "--delta-v", "3000,100000"],
    ],
    ids=["scan", "optimize", "mc", "hom", "drift"],
)
def test_byte_identical_reruns(argv, config, tmp_path, capsys):
    outputs = []
    for i in range(2):
        target = tmp_path / f"out{i}"
        code = cli.main([a.replace("{cfg}", config) for a in argv] + ["--output", str(target)])
        assert code == 0
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1] and outputs[0]


def test_seed_override_changes_search(config, capsys):
    _, a, _ = run(["optimize", "--config", config, "--seed", "1"], capsys)
    _, b, _ = run(["optimize", "--config", config, "--seed", "2"], capsys)
    assert json.loads(a)["source_a"] != json.loads(b)["source_a"]


def test_parallel_scan_deterministic(config, tmp_path):
    outs = []
    for i in range(2):
        target = tmp_path / f"p{i}.csv"
        assert cli.main(["scan", "--config", config, "--workers", "2", "--output", str(target)]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "asyncmdi", "hom", "--delta-v", "0:0:1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "delta_v_hz,visibility,error_rate"
