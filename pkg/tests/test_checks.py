import json

import numpy as np
import pytest

from sheetsolve.checks import CheckResult, VerifyReport, _guard, le, sample_pocket, verify
from sheetsolve.contour import pocket_branch, integration_set_distance
from sheetsolve.io import dump_json
from sheetsolve.plotting import spectrum_svg
from sheetsolve.scenarios import SHIPPED
from sheetsolve.spectral import sheet_spectrum


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_verify_passes_on_shipped(name):
    sf = SHIPPED[name]()
    rep = verify(sf, "-" * sf.scenario.m, oracle_N=256, warm_starts=5)
    assert rep.passed, [c.to_dict() for c in rep.failed()]
    doc = json.loads(dump_json(rep.to_dict()))
    assert doc["all_passed"] and len(doc["checks"]) > 15


def test_guard_turns_errors_into_failures():
    rep = VerifyReport("x", "-", 0, "file")

    def broken():
        raise ValueError("bad")

    _guard(rep, "broken check", broken)
    assert not rep.passed
    assert rep.failed()[0].relation == "error"
    assert rep.failed()[0].to_dict()["value"] == "nan"


def test_comparison_helpers():
    assert le("a", 1.0, 1.0).passed
    assert not le("a", 1.1, 1.0).passed
    assert CheckResult("b", True, float("inf"), 1.0).to_dict()["value"] == "inf"


def test_pocket_samples_keep_their_margin(solved):
    _, c, _ = solved("gap3")
    pts = sample_pocket(c, np.random.default_rng(1), 50)
    assert len(pts) == 50
    for z, k in pts:
        assert pocket_branch(c, z) == k
        assert integration_set_distance(c, z) >= 0.1


def test_svg_plot(tmp_path, solved):
    sf, c, sol = solved("gap3")
    evs = sheet_spectrum(sf.scenario, c, sol)
    p = spectrum_svg(sf.scenario, c, evs, tmp_path / "gap3.svg")
    text = p.read_text()
    assert "<svg" in text and "resonance" in text and "real_isolated" in text
