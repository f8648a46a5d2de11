import math

import numpy as np
import pytest
from scipy import integrate

from sheetsolve.contour import Circle, depth_contour, reflect_contour
from sheetsolve.factor import (
    CircleError,
    GammaCircle,
    adjoint_residual,
    compute_omega,
    eval_W1,
    gamma_circles,
    moment_functionals,
)
from sheetsolve.model import spectral_norm
from sheetsolve.scenarios import l1, l1_resonance
from sheetsolve.solver import solve_basic_equation

KAPPA = 0.05


@pytest.fixture(scope="module")
def l1_pair():
    s = l1().scenario
    c = depth_contour(s, "-", 0.5)
    cr = reflect_contour(c)
    return s, c, cr, solve_basic_equation(s, c), solve_basic_equation(s, cr)


@pytest.mark.parametrize("z", [0.2 - 0.2j, -0.1 + 0.3j, 1.0 - 0.1j])
def test_l1_w1_closed_form(l1_pair, z):
    s, c, _, sol, _ = l1_pair
    h = sol.h1[0, 0]
    rep = eval_W1(s, c, sol, z)
    expected = (-z + KAPPA / (z + 1j)) / (h - z)
    assert abs(rep.w1[0, 0] - expected) < 1e-9
    assert rep.residual < 1e-12


def test_l1_omega_closed_form_and_quadrature(l1_pair):
    s, c, cr, sol, sol_r = l1_pair
    h = sol.h1[0, 0]
    om = compute_omega(s, c, sol, sol_r)
    closed = KAPPA / (h + 1j) ** 2

    def f(t):
        mu = t - 0.5j
        rho = KAPPA / math.pi / (mu * mu + 1)
        return rho / (h - mu) ** 2

    re, _ = integrate.quad(lambda t: f(t).real, -math.inf, math.inf, epsabs=1e-14)
    im, _ = integrate.quad(lambda t: f(t).imag, -math.inf, math.inf, epsabs=1e-14)
    assert abs(complex(re, im) - closed) < 1e-10
    assert abs(om.value[0, 0] - closed) < 1e-9
    assert om.bound_ok
    assert sol.omega is om.value


def test_l1_moments(l1_pair):
    s, c, _, sol, sol_r = l1_pair
    om = compute_omega(s, c, sol, sol_r)
    p0, p1 = moment_functionals(s, c, sol)
    inv = 1.0 / (1.0 + om.value[0, 0])
    assert abs(p0[0, 0] - inv) < 1e-8
    assert abs(p1[0, 0] - l1_resonance() * inv) < 1e-8


def test_w1_inverse_bound_on_vicinity(solved):
    sf, c, sol = solved("polybump2")
    s = sf.scenario
    d0 = sol.certificate.d0
    for lam in np.linalg.eigvalsh(s.a1):
        for t in np.linspace(0, 2 * np.pi, 12, endpoint=False):
            z = lam + 0.99 * d0 / 2 * np.exp(1j * t)
            rep = eval_W1(s, c, sol, z)
            assert rep.bound is not None and rep.bound_ok
            assert rep.residual < 1e-9


def test_w1_backends_agree(solved):
    from sheetsolve._backend import available_backends

    sf, c, sol = solved("gap3")
    vals = [eval_W1(sf.scenario, c, sol, 0.1 + 0.2j, backend=b).w1 for b in available_backends()]
    for v in vals[1:]:
        assert np.abs(v - vals[0]).max() < 1e-13


def test_zero_coupling_trivial(solved):
    sf, c, sol = solved("zero", "+")
    s = sf.scenario
    assert np.array_equal(eval_W1(s, c, sol, 0.3 + 0.2j).w1, np.eye(3))
    om = compute_omega(s, c, sol, solve_basic_equation(s, reflect_contour(c)))
    assert om.norm == 0.0 and om.bound_ok


@pytest.mark.parametrize("name", ["polybump2", "gap3", "halfline2"])
def test_adjoint_and_omega_symmetry(solved, name):
    sf, c, sol = solved(name)
    s = sf.scenario
    cr = reflect_contour(c)
    sol_r = solve_basic_equation(s, cr)
    for z in [0.3 + 0.1j, -0.5 - 0.17j, 1.1 + 0.7j]:
        assert adjoint_residual(s, c, cr, sol, sol_r, z) < 1e-9
    om = compute_omega(s, c, sol, sol_r)
    om_r = compute_omega(s, cr, sol_r, sol)
    assert spectral_norm(om_r.value - om.value.conj().T) < 1e-9
    assert om.norm < om.bound


@pytest.mark.parametrize("name", ["polybump2", "gap3"])
def test_moment_identities(solved, name):
    sf, c, sol = solved(name)
    s = sf.scenario
    sol_r = solve_basic_equation(s, reflect_contour(c))
    om = compute_omega(s, c, sol, sol_r)
    p0, p1 = moment_functionals(s, c, sol)
    inv = np.linalg.inv(np.eye(s.n) + om.value)
    assert spectral_norm(p0 - inv) < 1e-8
    assert spectral_norm(p1 - sol.h1 @ inv) < 1e-8
    assert spectral_norm(p1 - inv @ sol_r.h1.conj().T) < 1e-8
    # first moment over zeroth recovers H1
    assert spectral_norm(p1 @ np.linalg.inv(p0) - sol.h1) < 1e-8


def test_gamma_circles_are_disjoint_and_enclose(solved):
    sf, c, sol = solved("gap3")
    circles = gamma_circles(sf.scenario, sol)
    assert len(circles) == 3
    eig = np.linalg.eigvals(sol.h1)
    for e in eig:
        assert sum(g.circle.contains(e) for g in circles) == 1
    for i, a in enumerate(circles):
        for b in circles[i + 1:]:
            assert abs(a.circle.center - b.circle.center) > a.circle.radius + b.circle.radius


def test_overlapping_circles_raise(l1_pair):
    s, c, _, sol, _ = l1_pair
    g = GammaCircle(Circle(0j, 0.2), (0.0,), True)
    h = GammaCircle(Circle(0.1 + 0j, 0.2), (0.0,), True)
    with pytest.raises(CircleError, match="overlap"):
        moment_functionals(s, c, sol, [g, h])


def test_circle_leaving_vicinity_raises(l1_pair):
    s, c, _, sol, _ = l1_pair
    g = GammaCircle(Circle(0j, 0.3), (0.0,), False)
    with pytest.raises(CircleError, match="vicinity"):
        moment_functionals(s, c, sol, [g])


def test_circle_through_path_raises(l1_pair):
    s, c, _, sol, _ = l1_pair
    g = GammaCircle(Circle(0j, 0.5), (0.0,), True)
    with pytest.raises(CircleError):
        moment_functionals(s, c, sol, [g], M=64)
