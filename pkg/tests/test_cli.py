import json
import subprocess
import sys

import numpy as np
import pytest

from diractrace import cli, symplectic as sy


def run_cli(args):
    proc = subprocess.run(
        [sys.executable, "-m", "diractrace.cli", *args],
        capture_output=True,
        text=True,
    )
    return proc.returncode, proc.stdout, proc.stderr


def write_cfg(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def test_classify_loxodromic_matrix(tmp_path):
    M = sy.assemble_normal_form(sy.BlockDecomposition(loxodromic=((0.5, 1.0),)))
    cfg = write_cfg(tmp_path, "c.json", {"matrix": M.tolist()})
    code, out, _ = run_cli(["classify", "--config", cfg])
    assert code == 0
    res = json.loads(out)["result"]
    assert res["loxodromic"][0] == pytest.approx([0.5, 1.0])


def test_spectrum_csv_contains_expected_rows(tmp_path):
    cfg = write_cfg(tmp_path, "s.json", {"mu": [1.0], "h": 0.04, "cutoff": 0.3})
    code, out, _ = run_cli(["spectrum", "--config", cfg, "--format", "csv"])
    assert code == 0
    assert f"{np.sqrt(0.08):.17g}" in out
    assert f"{-np.sqrt(0.08):.17g}" in out


def test_trace_check_circle(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "t.json",
        {"T_gamma": float(np.sqrt(3.0)), "L_gamma": 1.0,
         "h_list": [0.05, 0.02, 0.01], "lambda": 0.3},
    )
    code, out, _ = run_cli(["trace-check", "--config", cfg])
    assert code == 0
    rows = json.loads(out)["rows"]
    assert all(r["rel_err"] < 1e-6 for r in rows)


def test_heat_command(tmp_path):
    cfg = write_cfg(
        tmp_path, "h.json",
        {"mu": [1.0], "t_list": [0.5, 1.0], "A_entries": [[1, 0, 1, 1.0]]},
    )
    code, out, _ = run_cli(["heat", "--config", cfg])
    assert code == 0
    res = json.loads(out)
    assert abs(res["master_integral"] - 1.0) < 1e-6
    assert res["u1_time_integral"] == pytest.approx(-1 / (8 * np.pi ** 2))


def test_eta_command(tmp_path):
    cfg = write_cfg(
        tmp_path, "e.json",
        {"T_gamma": float(np.sqrt(3.0)), "L_gamma": 1.0, "h_list": [0.05, 0.02]},
    )
    code, out, _ = run_cli(["eta", "--config", cfg])
    assert code == 0
    rows = json.loads(out)["rows"]
    assert all(r["abs_err"] < 1e-6 for r in rows)


def test_deterministic_outputs(tmp_path):
    cfg = write_cfg(tmp_path, "s.json", {"mu": [1.0, 1.3], "h": 0.05, "cutoff": 0.4})
    outs = {run_cli(["spectrum", "--config", cfg])[1] for _ in range(2)}
    assert len(outs) == 1


def test_error_paths_machine_readable(tmp_path):
    code, out, _ = run_cli(["classify", "--config", "/nonexistent.json"])
    assert code != 0
    assert json.loads(out)["error"]["code"] == "config-parse"
    cfg = write_cfg(tmp_path, "bad.json", {"mu": [1.0]})
    code, out, _ = run_cli(["spectrum", "--config", cfg])
    assert code != 0
    assert json.loads(out)["error"]["code"] == "config-invalid"
    # numerical failure: resonant trace model
    cfg = write_cfg(
        tmp_path, "res.json",
        {"T_gamma": 1.0, "L_gamma": 1.0, "h_list": [0.05], "beta": [np.pi]},
    )
    code, out, _ = run_cli(["trace-check", "--config", cfg])
    assert code != 0
    assert json.loads(out)["error"]["code"] == "ResonantModelError"


def test_output_directory_and_threads(tmp_path):
    cfg = write_cfg(
        tmp_path, "t.json",
        {"T_gamma": float(np.sqrt(3.0)), "L_gamma": 1.0,
         "h_list": [0.05, 0.02], "lambda": 0.3},
    )
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(
        ["trace-check", "--config", cfg, "--out", str(out_dir), "--threads", "2",
         "--format", "csv"]
    )
    assert code == 0
    path = out.strip()
    text = open(path).read()
    assert text.splitlines()[0].startswith("h,")
    assert len(text.splitlines()) == 3


def test_bnf_command(tmp_path):
    cfg = write_cfg(
        tmp_path, "b.json",
        {"mu": [1.0], "beta": [float(np.sqrt(2.0))], "order": 2, "seed": 1},
    )
    code, out, _ = run_cli(["bnf", "--config", cfg])
    assert code == 0
    res = json.loads(out)["result"]
    assert res["residual_min_weight"] is None or res["residual_min_weight"] > 2
