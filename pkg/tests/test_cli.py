import csv
import json
import math
import shutil
import subprocess
from pathlib import Path

import pytest

from sheetsolve import cli
from sheetsolve.checks import CheckResult, VerifyReport
from sheetsolve.io import dump_json, scenario_to_dict
from sheetsolve.scenarios import l1, l1_resonance
from sheetsolve.solver import ConvergenceError

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    err = capsys.readouterr().err
    return code, (json.loads(err) if err.strip() else None)


def test_validate_ok(tmp_path, capsys):
    code, err = run(["validate", "--scenario", SCENARIOS / "gap3.json", "--out", tmp_path], capsys)
    assert code == 0 and err is None
    doc = json.loads((tmp_path / "validation.json").read_text())
    assert doc["ok"] and doc["seed"] == 0 and len(doc["a1_eigenvalues"]) == 3


def test_validate_reports_errors(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"a1": [[0.0, 1.0], [0.0, 0.0]]}))
    code, err = run(["validate", "--scenario", p, "--out", tmp_path], capsys)
    assert code == cli.EXIT_INVALID
    assert err["error"] == "ValidationError" and err["exit_code"] == 2
    assert not json.loads((tmp_path / "validation.json").read_text())["ok"]


def test_unparseable_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("[")
    code, err = run(["solve", "--scenario", p, "--out", tmp_path], capsys)
    assert code == 2 and err["error"] == "ScenarioError"


def test_bad_sheet(tmp_path, capsys):
    code, err = run(["solve", "--scenario", SCENARIOS / "l1.json", "--sheet", "-+", "--out", tmp_path], capsys)
    assert code == 2 and err["error"] == "SheetError"


@pytest.mark.parametrize("sheet", ["--", "-+", "+-", "−−"])
def test_sheet_strings_that_look_like_options(tmp_path, capsys, sheet):
    code, err = run(["solve", "--scenario", SCENARIOS / "gap3.json", "--sheet", sheet, "--out", tmp_path], capsys)
    assert code == 0, err
    assert json.loads((tmp_path / "solution.json").read_text())["sheet"] == sheet.replace("−", "-")


def test_solve_l1(tmp_path, capsys):
    code, _ = run(["solve", "--scenario", SCENARIOS / "l1.json", "--sheet", "-", "--out", tmp_path], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "solution.json").read_text())
    sol = doc["solution"]
    h = complex(*sol["h1"][0][0])
    assert abs(h - l1_resonance()) < 1e-9
    assert sol["final_residual"] <= 1e-12
    assert sol["certificate"]["condition_ok"]
    assert sol["contour"]["source"] == "file"


def test_solve_zero_plus_sheet(tmp_path, capsys):
    code, _ = run(["solve", "--scenario", SCENARIOS / "zero.json", "--sheet", "+", "--out", tmp_path], capsys)
    assert code == 0
    sol = json.loads((tmp_path / "solution.json").read_text())["solution"]
    assert all(v == 0.0 for row in sol["x"] for v in row)


def test_unsolvable(tmp_path, capsys):
    data = scenario_to_dict(l1(0.5))
    p = tmp_path / "strong.json"
    dump_json(data, p)
    code, err = run(["solve", "--scenario", p, "--out", tmp_path], capsys)
    assert code == cli.EXIT_UNSOLVABLE and err["error"] == "SolvabilityError"


def test_convergence_failure(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise ConvergenceError("no convergence in 200 iterations")

    monkeypatch.setattr(cli, "solve_basic_equation", boom)
    code, err = run(["solve", "--scenario", SCENARIOS / "l1.json", "--out", tmp_path], capsys)
    assert code == cli.EXIT_DIVERGED and err["error"] == "ConvergenceError"


def test_check_failure(tmp_path, capsys, monkeypatch):
    import sheetsolve.checks

    def fake(sf, sheet, **kw):
        rep = VerifyReport(sf.scenario.name, sheet, kw["seed"], "file")
        rep.checks.append(CheckResult("always fails", False, 1.0, 0.0))
        return rep

    monkeypatch.setattr(sheetsolve.checks, "verify", fake)
    code, err = run(["verify", "--scenario", SCENARIOS / "l1.json", "--out", tmp_path], capsys)
    assert code == cli.EXIT_CHECKS and "always fails" in err["message"]
    assert not json.loads((tmp_path / "verify.json").read_text())["all_passed"]


def test_verify_l1(tmp_path, capsys):
    code, err = run(["verify", "--scenario", SCENARIOS / "l1.json", "--sheet", "-", "--out", tmp_path], capsys)
    assert code == 0, err
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["all_passed"] and doc["seed"] == 0
    for chk in doc["checks"]:
        assert {"value", "tolerance", "relation", "passed"} <= set(chk)


def test_spectrum_outputs(tmp_path, capsys):
    code, _ = run(["spectrum", "--scenario", SCENARIOS / "decoupled3.json", "--out", tmp_path], capsys)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "eigenvalues.csv").open()))
    assert list(rows[0]) == cli.CSV_HEADER
    embedded = [r for r in rows if r["class"] == "real_embedded"]
    assert len(embedded) == 1 and float(embedded[0]["re"]) == 0.2 and embedded[0]["branch"] == "0"
    svg = (tmp_path / "spectrum.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert doc["eigenvalue_error_estimate"] >= 0


def test_sweep_endpoints_match_quadratic(tmp_path, capsys):
    code, _ = run(["sweep", "--scenario", SCENARIOS / "l1.json", "--scale", "0.2:1.0:9", "--out", tmp_path], capsys)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert len(rows) == 9 and all(r["status"] == "ok" for r in rows)
    ts = [float(r["t"]) for r in rows]
    assert ts[0] == 0.2 and ts[-1] == 1.0 and ts[1] == 0.3
    for r in (rows[0], rows[-1]):
        z = complex(float(r["re"]), float(r["im"]))
        assert abs(z - l1_resonance(0.05 * float(r["t"]))) < 1e-9
        assert r["class"] == "resonance"


def test_bad_scale_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--scenario", str(SCENARIOS / "l1.json"), "--scale", "1:2"])
    assert exc.value.code == 2


@pytest.mark.parametrize(
    "argv, files",
    [
        (["solve", "--scenario", SCENARIOS / "gap3.json"], ["solution.json"]),
        (["spectrum", "--scenario", SCENARIOS / "polybump2.json"], ["eigenvalues.csv", "spectrum.json"]),
        (["sweep", "--scenario", SCENARIOS / "l1.json", "--scale", "0.5:1:3"], ["sweep.csv"]),
        (["verify", "--scenario", SCENARIOS / "l1.json", "--seed", "3"], ["verify.json"]),
    ],
)
def test_byte_identical_reruns(tmp_path, capsys, argv, files):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--out", a], capsys)[0] == 0
    assert run(argv + ["--out", b], capsys)[0] == 0
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


@pytest.mark.skipif(shutil.which("sheetsolve") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(
        ["sheetsolve", "solve", "--scenario", str(SCENARIOS / "zero.json"), "--sheet", "+", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "solution.json").exists()
