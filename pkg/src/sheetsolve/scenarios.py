"""Reference scenarios shipped with the package (also written to ``scenarios/*.json``)."""

from __future__ import annotations

import math

import numpy as np

from .io import ScenarioFile
from .model import Lorentz, PolyBump, make_scenario
from .oracle import decouple

L1_KAPPA = 0.05


def l1(kappa: float = L1_KAPPA) -> ScenarioFile:
    """Scalar channel at 0 coupled to the whole line with a Lorentzian density."""
    s = make_scenario([[0.0]], branches=[((-math.inf, math.inf), [(Lorentz(kappa, 0.0, 1.0), [[1.0]])])], name="l1")
    return ScenarioFile(s, {"-": {"depth": 0.5}})


def l1_resonance(kappa: float = L1_KAPPA) -> complex:
    """Small root of ``Y^2 + iY - kappa = 0``."""
    return 1j * (-1 + math.sqrt(1 - 4 * kappa)) / 2


def zero() -> ScenarioFile:
    """No coupling at all; ``A1`` has a double eigenvalue."""
    s = make_scenario(np.diag([0.2, 0.2, 0.6]), branches=[((-1.0, 1.0), [])], name="zero")
    return ScenarioFile(s, {"+": {"depth": 0.5}})


def polybump2() -> ScenarioFile:
    G = [[1.0, 0.5], [0.5, 0.6]]
    s = make_scenario(
        [[-0.3, 0.05], [0.05, 0.4]], branches=[((-1.0, 1.0), [(PolyBump(0.01, 1, 1), G)])], name="polybump2"
    )
    return ScenarioFile(s, {"-": {"depth": 0.4}})


def gap3() -> ScenarioFile:
    """Two finite branches around a spectral gap, one atom above them."""
    G1 = [[1.0, 0.3, 0.2], [0.3, 0.5, 0.1], [0.2, 0.1, 0.4]]
    G2 = [[0.4, 0.1, 0.2], [0.1, 0.6, 0.3], [0.2, 0.3, 1.0]]
    a1 = [[-1.2, 0.05, 0.0], [0.05, 0.0, 0.05], [0.0, 0.05, 1.3]]
    s = make_scenario(
        a1,
        atoms=[(3.0, 0.002 * np.ones((3, 3)))],
        branches=[((-2.0, -0.25), [(PolyBump(0.002, 1, 1), G1)]), ((0.25, 2.0), [(PolyBump(0.002, 1, 1), G2)])],
        name="gap3",
    )
    return ScenarioFile(s, {"--": {"depth": 0.3}})


def decoupled3() -> ScenarioFile:
    """Third coordinate decoupled: ``0.2`` is an exact eigenvalue embedded in branch 0."""
    a1 = [[-0.3, 0.02, 0.0], [0.02, 1.0, 0.0], [0.0, 0.0, 0.2]]
    G = [[1.0, 0.4, 0.3], [0.4, 0.8, 0.2], [0.3, 0.2, 0.9]]
    base = make_scenario(
        a1, branches=[((-1.0, 0.5), [(PolyBump(0.006, 1, 1), G)]), ((0.6, 1.5), [(PolyBump(0.006, 1, 1), G)])]
    )
    return ScenarioFile(decouple(base, [0, 0, 1], name="decoupled3"), {"--": {"depth": 0.25}})


def halfline2() -> ScenarioFile:
    s = make_scenario(
        [[0.7, 0.1], [0.1, 1.6]],
        branches=[((0.0, math.inf), [(Lorentz(0.03, 1.0, 0.8), [[1.0, 0.3], [0.3, 0.7]])])],
        name="halfline2",
    )
    return ScenarioFile(s, {"-": {"depth": 0.5}})


SHIPPED = {"l1": l1, "zero": zero, "polybump2": polybump2, "gap3": gap3, "decoupled3": decoupled3, "halfline2": halfline2}
