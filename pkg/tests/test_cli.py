import json
import subprocess
import sys

import numpy as np
import pytest

from ultraflat_lab.cli import main
from ultraflat_lab.poly_core import load_polynomial, make_unimodular, save_polynomial


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_quadratic(tmp_path, capsys):
    out = tmp_path / "q.json"
    assert run("generate", "--kind", "quadratic", "--n", 255, "--out", out) == 0
    P = load_polynomial(out)
    assert P.degree == 255
    text = capsys.readouterr().out
    assert "mean_square = 256" in text and "certified eps" in text


def test_generate_rudin_shapiro(tmp_path):
    out = tmp_path / "rs.json"
    assert run("generate", "--kind", "rudin_shapiro", "--m", 3, "--out", out) == 0
    P = load_polynomial(out)
    assert P.degree == 7
    np.testing.assert_array_equal(P.coeffs, [1, 1, 1, -1, 1, 1, -1, 1])


@pytest.mark.parametrize("argv", [
    ["generate", "--kind", "quadratic", "--n", "-1", "--out", "x.json"],
    ["generate", "--kind", "rudin_shapiro", "--n", "6", "--out", "x.json"],
    ["generate", "--kind", "cubic", "--n", "6", "--out", "x.json"],
    ["flatten", "--kind", "random", "--n", "8", "--damping", "0", "--out", "x.json"],
    ["analyze", "--in", "missing.json", "--out", "d"],
    ["verify", "--ns", "63,31", "--out", "d"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_unknown_theorem_exit_2(tmp_path):
    src = tmp_path / "p.json"
    save_polynomial(make_unimodular([1, 1j]), src)
    with pytest.raises(SystemExit) as info:
        run("verify", "--in", src, "--theorems", "T99", "--out", tmp_path / "v")
    assert info.value.code == 2


def test_console_script_exit_code(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ultraflat_lab", "generate", "--kind", "quadratic", "--n", "-1", "--out", str(tmp_path / "x.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2 and "non-negative" in proc.stderr


def test_flatten_already_flat_exits_0(tmp_path, capsys):
    src = tmp_path / "c.json"
    save_polynomial(make_unimodular([1j]), src)
    out = tmp_path / "f.json"
    assert run("flatten", "--in", src, "--out", out) == 0
    trace = (tmp_path / "f.trace.csv").read_text().splitlines()
    assert trace[0] == "iter,eps,stage" and len(trace) == 2
    assert "iterations = 1" in capsys.readouterr().out


def test_flatten_max_iters_exits_3_with_outputs(tmp_path):
    out = tmp_path / "f.json"
    trace = tmp_path / "t.csv"
    code = run("flatten", "--kind", "random", "--n", 200, "--seed", 4, "--max-iters", 1, "--out", out, "--trace", trace)
    assert code == 3
    assert load_polynomial(out).degree == 200
    assert len(trace.read_text().splitlines()) == 2


def test_analyze_one_plus_z(tmp_path):
    src = tmp_path / "p.json"
    save_polynomial(make_unimodular([1, 1]), src)
    # the default even grid contains t = pi where 1 + z vanishes
    assert run("analyze", "--in", src, "--out", tmp_path / "a") == 4
    assert run("analyze", "--in", src, "--M", 63, "--out", tmp_path / "b") == 0
    data = np.genfromtxt(tmp_path / "b" / "phase.csv", delimiter=",", names=True)
    np.testing.assert_allclose(data["alpha_prime"], 0.5, atol=1e-12)
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert summary["identities"]["speed_identity_defect"] <= 1e-10


def test_analyze_reports_t_on_failure(tmp_path, capsys):
    src = tmp_path / "p.json"
    save_polynomial(make_unimodular([1, 1, 1, 1]), src)
    assert run("analyze", "--in", src, "--M", 64, "--out", tmp_path / "a") == 4
    assert "t = " in capsys.readouterr().out


def test_analyze_rejects_small_grid(tmp_path):
    src = tmp_path / "p.json"
    save_polynomial(make_unimodular(np.ones(10)), src)
    with pytest.raises(SystemExit) as info:
        run("analyze", "--in", src, "--M", 12, "--out", tmp_path / "a")
    assert info.value.code == 2


def test_analyze_flat_input(tmp_path):
    out = tmp_path / "f.json"
    run("flatten", "--kind", "quadratic", "--n", 64, "--target-eps", 0.3, "--out", out)
    assert run("analyze", "--in", out, "--out", tmp_path / "a", "--format", "json") == 0
    for name in ("phase.csv", "phase.json", "distribution.json", "summary.json"):
        assert (tmp_path / "a" / name).exists()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["identities"]["speed_identity_defect"] <= 1e-8
    assert summary["identities"]["sine_beta_defect"] <= 1e-8 * np.sqrt(65)


def test_verify_single_file_t22(tmp_path):
    src = tmp_path / "p.json"
    save_polynomial(make_unimodular([1, 1j]), src)
    assert run("verify", "--in", src, "--theorems", "T22", "--out", tmp_path / "v") == 0
    lines = (tmp_path / "v" / "tables.csv").read_text().splitlines()
    assert len(lines) == 2
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["lhs"]) == 4 and float(row["rhs"]) == 2


def test_verify_sweep_with_svg(tmp_path):
    out = tmp_path / "v"
    code = run("verify", "--ns", "31,63", "--theorems", "T21", "--qs", "1,2,4", "--max-iters", 40,
               "--svg", "--format", "json", "--save-sweep", "--out", out)
    assert code == 0
    tables = json.loads((out / "tables.json").read_text())
    assert len(tables) == 3
    for q in ("1", "2", "4"):
        svg = (out / f"T21_q{q}.svg").read_text()
        assert svg.startswith("<svg") and "<polyline" in svg and "n (log scale)" in svg
    assert (out / "sweep" / "P_63.json").exists()


def test_svg_for_residual_table(tmp_path):
    src = tmp_path / "p.json"
    save_polynomial(make_unimodular([1, 1j, 1, -1]), src)
    run("verify", "--in", src, "--theorems", "T25", "--svg", "--out", tmp_path / "v")
    assert "normalized residual" in (tmp_path / "v" / "T25.svg").read_text()
