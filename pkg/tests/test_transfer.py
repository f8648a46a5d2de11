import math

import numpy as np
import pytest
from scipy import integrate

from sheetsolve.contour import QuadratureRule, depth_contour, physical_contour
from sheetsolve.model import PolyBump, density_values, make_scenario
from sheetsolve.scenarios import l1, polybump2
from sheetsolve.transfer import (
    M1_many,
    SpectralCollisionError,
    apply_V1_operator,
    eval_M1_physical,
    eval_M1_sheet,
    eval_V1_point,
)

KAPPA = 0.05


def bump_closed_form(z, c=0.1):
    # int_{-1}^{1} c (1 - mu^2) / (z - mu) dmu
    return c * ((1 - z * z) * np.log((z + 1) / (z - 1)) + 2 * z)


def bump():
    return make_scenario([[0.0]], branches=[((-1.0, 1.0), [(PolyBump(0.1), [[1.0]])])])


def test_l1_physical_value_at_i():
    s = l1().scenario
    v = eval_V1_point(s, physical_contour(s), 1j)
    assert abs(v.value[0, 0] - (-0.025j)) < 1e-10
    assert v.quadrature_error < 1e-8


@pytest.mark.parametrize("z", [0.3 + 0.2j, -2 + 1j, 5 - 3j, 0.13 - 0.2j])
def test_l1_physical_matches_residue_closed_form(z):
    s = l1().scenario
    expected = KAPPA / (z + 1j) if z.imag > 0 else KAPPA / (z - 1j)
    v = eval_V1_point(s, physical_contour(s), z)
    assert abs(v.value[0, 0] - expected) < 1e-9


@pytest.mark.parametrize("z", [0.1 - 0.05j, 0.1 - 0.01j, -0.2 + 0.02j])
def test_near_axis_error_is_covered_by_estimate(z):
    s = l1().scenario
    expected = KAPPA / (z + 1j) if z.imag > 0 else KAPPA / (z - 1j)
    v = eval_V1_point(s, physical_contour(s), z)
    assert abs(v.value[0, 0] - expected) <= v.quadrature_error


@pytest.mark.parametrize("z", [0.2 - 0.25j, -3 - 0.1j, 1 + 0.5j])
def test_l1_sheet_is_upper_formula_continued(z):
    # above the path the continued function is kappa / (z + i)
    s = l1().scenario
    c = depth_contour(s, "-", 0.5)
    m1 = eval_M1_sheet(s, c, z).value[0, 0]
    assert abs(m1 - (-z + KAPPA / (z + 1j))) < 1e-9


def test_l1_sheet_below_path_is_physical():
    s = l1().scenario
    c = depth_contour(s, "-", 0.5)
    z = 0.3 - 0.8j
    assert abs(eval_M1_sheet(s, c, z).value[0, 0] - (-z + KAPPA / (z - 1j))) < 1e-9


@pytest.mark.parametrize("z", [0.5j, 0.3 + 0.01j, 2.0 + 0.0j, -0.4 - 0.7j])
def test_bump_physical_closed_form(z):
    s = bump()
    v = eval_V1_point(s, physical_contour(s), z)
    assert abs(v.value[0, 0] - bump_closed_form(z)) < 1e-10 + v.quadrature_error


def test_bump_against_adaptive_quadrature():
    s = bump()
    z = 0.1 + 0.3j
    re, _ = integrate.quad(lambda t: (0.1 * (1 - t * t) / (z - t)).real, -1, 1, epsabs=1e-14)
    im, _ = integrate.quad(lambda t: (0.1 * (1 - t * t) / (z - t)).imag, -1, 1, epsabs=1e-14)
    v = eval_V1_point(s, physical_contour(s), z).value[0, 0]
    assert abs(v - complex(re, im)) < 1e-12


def test_residue_relation_for_bump():
    s = bump()
    c = depth_contour(s, "-", 0.5)
    for z in [0.1 - 0.2j, -0.5 - 0.1j, 0.6 - 0.3j]:
        lhs = eval_M1_sheet(s, c, z).value - eval_M1_physical(s, z).value
        rhs = 2j * math.pi * (-1) * density_values(s.branches[0], np.array([z]), 1)[0]
        assert np.abs(lhs - rhs).max() < 1e-10


def test_evaluation_on_the_path_raises():
    s = bump()
    c = depth_contour(s, "-", 0.5)
    with pytest.raises(SpectralCollisionError):
        eval_V1_point(s, c, 0.0 - 0.5j)
    with pytest.raises(SpectralCollisionError):
        eval_V1_point(s, physical_contour(s), 0.3)


def test_operator_value_is_diagonal_for_diagonal_argument():
    s = make_scenario(np.zeros((2, 2)), branches=[((-1.0, 1.0), [(PolyBump(0.1), np.eye(2))])])
    c = physical_contour(s)
    y = np.diag([0.3 + 0.4j, -2.0 + 0.1j])
    app = apply_V1_operator(s, c, y)
    expected = np.diag([bump_closed_form(y[0, 0]), bump_closed_form(y[1, 1])])
    np.testing.assert_allclose(app.value, expected, atol=1e-10)
    assert app.bound.holds


def test_operator_value_agrees_with_eigendecomposition():
    sf = polybump2()
    s = sf.scenario
    c = depth_contour(s, "-", 0.4)
    rng = np.random.default_rng(3)
    y = 0.1 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    val = apply_V1_operator(s, c, y).value
    w, v = np.linalg.eig(y)
    # sum over nodes of K(mu) (Y - mu)^-1 with (Y - mu)^-1 = V diag(1/(w - mu)) V^-1
    from sheetsolve.transfer import discrete_measure

    meas = discrete_measure(s, c)
    vinv = np.linalg.inv(v)
    ref = sum(k @ v @ np.diag(1 / (w - m)) @ vinv for m, k in zip(meas.mu, meas.wk))
    np.testing.assert_allclose(val, ref, atol=1e-13)


def test_operator_collision_raises():
    s = bump()
    c = physical_contour(s)
    with pytest.raises(SpectralCollisionError):
        apply_V1_operator(s, c, np.array([[0.2]]))


def test_many_matches_pointwise():
    sf = polybump2()
    s = sf.scenario
    c = depth_contour(s, "-", 0.4)
    zs = np.array([0.1 - 0.1j, 0.5j, 1.5])
    many = M1_many(s, c, zs)
    for z, m in zip(zs, many):
        np.testing.assert_allclose(m, eval_M1_sheet(s, c, z).value, atol=1e-15)


def test_quadrature_error_estimate_is_honest():
    s = bump()
    rough = depth_contour(s, "-", 0.5, QuadratureRule(order=4, panels=2))
    z = 0.2 + 0.3j
    v = eval_V1_point(s, rough, z)
    true = bump_closed_form(z)  # z is above the path, so the sheet value is physical
    assert abs(v.value[0, 0] - true) <= 10 * v.quadrature_error
