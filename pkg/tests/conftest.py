import functools

import pytest

from sheetsolve.io import resolve_contour
from sheetsolve.scenarios import SHIPPED
from sheetsolve.solver import solve_basic_equation


@functools.lru_cache(maxsize=None)
def shipped(name: str, sheet: str | None = None):
    """Scenario file, contour and solution for a shipped scenario (cached per session)."""
    sf = SHIPPED[name]()
    sheet = sheet or "-" * sf.scenario.m
    c, _ = resolve_contour(sf, sheet)
    sol = solve_basic_equation(sf.scenario, c)
    return sf, c, sol


@pytest.fixture(scope="session")
def solved():
    return shipped


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
