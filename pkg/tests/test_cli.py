"""End-to-end command-line checks: pipelines, reports, determinism, exit
codes."""

import json
import subprocess
import sys

import numpy as np

from thinobstacle.cli import main
from thinobstacle.grid import read_sgf1


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_selftest_passes(capsys):
    code, out, _ = run_cli(["--json", "--deterministic", "selftest"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] is True
    assert rep["failures"] == []
    assert rep["schema_version"] == 1
    assert "timestamp" not in rep


def test_exact_then_frequency_pipeline(tmp_path, capsys):
    field = tmp_path / "reg.sgf1"
    code, _, _ = run_cli(["exact", "regular", "--m", "257",
                          "-o", str(field)], capsys)
    assert code == 0
    fld = read_sgf1(field)
    assert fld.grid.m == 257

    csv = tmp_path / "freq.csv"
    code, out, _ = run_cli(["--json", "--deterministic", "frequency",
                            str(field), "--at", "0", "--csv", str(csv)],
                           capsys)
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["kappa"] - 1.5) < 0.05
    assert csv.exists()


def test_solve_full_contact(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "problem.n = 2\nproblem.m = 33\nboundary.kind = constant\n"
        f"boundary.value = -1\noutput.dir = {tmp_path}\n"
        "solver.tol = 1e-12\n")
    code, out, _ = run_cli(["--json", "--deterministic", "solve", str(cfg)],
                           capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["converged"] is True
    assert rep["complementarity"]["ok"] is True
    sol = read_sgf1(rep["field"])
    # the constraint pins the whole interior plane at zero
    plane = sol.values[:, sol.grid.k_plane]
    assert np.abs(plane[1:-1]).max() < 1e-10


def test_classify_command(tmp_path, capsys):
    field = tmp_path / "reg.sgf1"
    run_cli(["exact", "regular", "--m", "257", "-o", str(field)], capsys)
    cfg = tmp_path / "ana.cfg"
    cfg.write_text(f"problem.n = 2\nproblem.m = 257\noutput.dir = {tmp_path}\n"
                   "analysis.margin = 0.5\n")
    report = tmp_path / "classify.json"
    code, _, _ = run_cli(["--deterministic", "classify", str(field),
                          str(cfg), "--report", str(report)], capsys)
    assert code == 0
    rep = json.loads(report.read_text())
    assert rep["free_boundary_count"] == 1
    [entry] = rep["points"]
    assert entry["verdict"] == "Regular"
    assert abs(entry["kappa"] - 1.5) < 0.05


def test_blowup_command(tmp_path, capsys):
    field = tmp_path / "sing.sgf1"
    run_cli(["exact", "polynomial", "--m", "129", "--name",
             "x1sq_minus_xnsq", "-o", str(field)], capsys)
    code, out, _ = run_cli(["--json", "--deterministic", "blowup",
                            str(field), "--at", "0", "--t", "0.3",
                            "--model", "singular:1"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["residual"] < 1e-3 * rep["norm"]
    coefs = {tuple(e): c for e, c in zip(rep["params"]["exponents"],
                                         rep["params"]["coefficients"])}
    assert abs(coefs[(2, 0)] - 1.0) < 0.05


def test_missing_config_is_exit_1(capsys):
    code, _, err = run_cli(["solve", "/nonexistent/run.cfg"], capsys)
    assert code == 1


def test_bad_config_key_is_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus.key = 1\n")
    code, _, _ = run_cli(["solve", str(cfg)], capsys)
    assert code == 1


def test_domain_error_is_exit_3(tmp_path, capsys):
    field = tmp_path / "reg.sgf1"
    run_cli(["exact", "regular", "--m", "65", "-o", str(field)], capsys)
    # a frequency request centered at the box edge leaves no trusted radii
    code, _, _ = run_cli(["--json", "frequency", str(field),
                          "--at", "0.999"], capsys)
    assert code == 3


def test_deterministic_reports_are_byte_identical(tmp_path, capsys):
    field = tmp_path / "reg.sgf1"
    run_cli(["exact", "regular", "--m", "129", "-o", str(field)], capsys)
    rep = tmp_path / "r.json"
    csv = tmp_path / "c.csv"
    outs = []
    for _ in range(2):
        code, _, _ = run_cli(["--deterministic", "frequency", str(field),
                              "--at", "0.1", "--csv", str(csv),
                              "--report", str(rep)], capsys)
        assert code == 0
        outs.append((rep.read_bytes(), csv.read_bytes()))
    assert outs[0] == outs[1]


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "thinobstacle.cli", "--json",
         "--deterministic", "selftest"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
