"""Command line interface: outputs, determinism and exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from finslerkit import cli, report

DATA = Path(__file__).parent / "data"


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_exit_code_and_json(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, _ = _run(capsys, "classify", "--metric", str(DATA / "funk.ini"), "--samples", "3", "--out", str(out))
    assert code == 2
    d = json.loads(out.read_text())
    assert d["schema"] == 1 and d["metric"] == "FUNK_2"
    assert d["classes"]["isotropic_S"]["verdict"] is True


def test_classify_is_byte_identical_across_processes(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        proc = subprocess.run([sys.executable, "-m", "finslerkit.cli", "classify", "--metric", "FUNK_2",
                               "--samples", "3", "--seed", "5", "--out", str(path)], capture_output=True)
        assert proc.returncode == 2, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_identities_pass_and_fail(capsys, monkeypatch):
    code, out, _ = _run(capsys, "identities", "--metric", "FUNK_2", "--suite", "eiilj,creducible", "--samples", "3")
    assert code == 0 and json.loads(out)["pass"] is True
    failing = report.SuiteReport("X", {"eq9": [report.IdentityResult("eq9", 1.0, 1e-6)]}, 1, 0)
    monkeypatch.setattr(report, "run_identity_suite", lambda *a, **k: failing)
    code, out, _ = _run(capsys, "identities", "--metric", "FUNK_2")
    assert code == 3 and json.loads(out)["pass"] is False


def test_inapplicable_suite_is_input_error(capsys):
    code, _, err = _run(capsys, "identities", "--metric", "FUNK_3", "--suite", "surface")
    assert code == 4 and "does not apply" in err


def test_curvature_values(capsys):
    code, out, _ = _run(capsys, "curvature", "--metric", "FUNK_2", "--at", "x=0.1,0.2;y=1,0.5", "--quantity", "S")
    d = json.loads(out)
    assert code == 0 and d["quantity"] == "S" and isinstance(d["value"], str)
    code, out, _ = _run(capsys, "curvature", "--metric", "SPHERE_2", "--at", "x=0.1,0.2;y=1,0",
                        "--quantity", "K", "--u", "0,1")
    assert float(json.loads(out)["value"]) == pytest.approx(1.0, abs=1e-10)
    code, out, _ = _run(capsys, "curvature", "--metric", "EUCLID_2", "--at", "x=0,0;y=1,0", "--quantity", "g")
    assert np.allclose(np.array(json.loads(out)["value"], float), np.eye(2))


def test_flow_trace(capsys, tmp_path):
    out = tmp_path / "t.txt"
    code, _, _ = _run(capsys, "flow", "--metric", "EUCLID_2", "--x0", "0,0", "--y0", "1,0", "--tmax", "1",
                      "--track", "psi,f", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# t x1 x2 y1 y2 Psi f"
    last = np.array(lines[-1].split(), float)
    assert np.allclose(last[:5], [1.0, 1.0, 0.0, 1.0, 0.0], atol=1e-12)


def test_flow_boundary_note(capsys):
    code, out, err = _run(capsys, "flow", "--metric", "FUNK_2", "--x0", "0,0", "--y0", "1,0", "--tmax", "10",
                          "--track", "")
    assert code == 0 and "left the chart" in err
    assert out.startswith("# t x1 x2 y1 y2\n")


@pytest.mark.parametrize("argv", [
    ["classify"],
    ["bogus"],
    ["classify", "--metric", "NOPE"],
    ["classify", "--metric", str(DATA / "nonconvex.ini")],
    ["curvature", "--metric", "FUNK_2", "--at", "x=0.1;y=1,0", "--quantity", "S"],
    ["curvature", "--metric", "FUNK_2", "--at", "x=0.1,0.2", "--quantity", "S"],
    ["curvature", "--metric", "FUNK_2", "--at", "x=0.1,0.2;y=1,0", "--quantity", "Z"],
    ["curvature", "--metric", "FUNK_2", "--at", "x=0.1,0.2;y=1,0", "--quantity", "K"],
    ["curvature", "--metric", "FUNK_2", "--at", "x=0.9,0.2;y=1,0", "--quantity", "S"],
    ["flow", "--metric", "FUNK_2", "--x0", "0,0", "--y0", "1,a", "--tmax", "1"],
    ["flow", "--metric", "FUNK_2", "--x0", "0,0", "--y0", "1,0", "--tmax", "1", "--track", "kappa"],
])
def test_input_errors_exit_4(capsys, argv):
    code, _, _ = _run(capsys, *argv)
    assert code == 4


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0


def test_console_script_installed():
    proc = subprocess.run(["finslerkit", "classify", "--metric", "EUCLID_2", "--samples", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and json.loads(proc.stdout)["metric"] == "EUCLID_2"
