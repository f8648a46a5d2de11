import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheetsolve.model import (
    Gauss,
    Lorentz,
    PoleError,
    PolyBump,
    ScenarioError,
    a1_spectrum,
    ensure_valid,
    eval_density,
    make_scenario,
    spectral_norm,
    validate_scenario,
)


def lorentz_line(a1=((0.0,),), kappa=0.05):
    return make_scenario(a1, branches=[((-math.inf, math.inf), [(Lorentz(kappa, 0.0, 1.0), [[1.0]])])])


def test_valid_scenario_has_no_errors():
    rep = validate_scenario(lorentz_line())
    assert rep.ok
    assert rep.a1_eigenvalues == [0.0]
    assert sorted(z.imag for _, z in rep.poles) == [-1.0, 1.0]


def test_non_hermitian_a1_is_rejected():
    s = make_scenario([[0.0, 1.0], [0.0, 0.0]])
    rep = validate_scenario(s)
    assert not rep.ok
    assert "Hermitian" in rep.errors[0]
    with pytest.raises(ScenarioError):
        ensure_valid(s)


def test_indefinite_atom_is_rejected():
    s = make_scenario([[0.0]], atoms=[(1.0, [[-0.1]])])
    assert any("PSD" in e for e in validate_scenario(s).errors)


def test_atom_inside_branch_is_rejected():
    s = make_scenario([[0.0]], atoms=[(0.0, [[0.1]])], branches=[((-1.0, 1.0), [(PolyBump(0.1), [[1.0]])])])
    assert any("inside AC interval" in e for e in validate_scenario(s).errors)


def test_overlapping_branches_are_rejected():
    s = make_scenario(
        [[0.0]],
        branches=[((-1.0, 1.0), [(PolyBump(0.1), [[1.0]])]), ((0.5, 2.0), [(PolyBump(0.1), [[1.0]])])],
    )
    assert any("overlap" in e for e in validate_scenario(s).errors)


def test_polybump_on_infinite_interval_is_inadmissible():
    s = make_scenario([[0.0]], branches=[((0.0, math.inf), [(PolyBump(0.1), [[1.0]])])])
    errs = validate_scenario(s).errors
    assert any("inadmissible" in e for e in errs)


def test_errors_are_collected_not_short_circuited():
    s = make_scenario(
        [[0.0]],
        atoms=[(0.5, [[-1.0]])],
        branches=[((-1.0, 1.0), [(PolyBump(-0.1), [[1.0]])])],
    )
    assert len(validate_scenario(s).errors) >= 3


def test_branch_without_eigenvalue_warns():
    s = make_scenario([[5.0]], branches=[((-1.0, 1.0), [(PolyBump(0.1), [[1.0]])])])
    rep = validate_scenario(s)
    assert rep.ok and rep.warnings


def test_lorentz_density_is_analytic_continuation():
    p = Lorentz(0.05, 0.0, 1.0)
    z = 0.3 - 0.4j
    # (c w / pi) / ((z - i)(z + i))
    expected = 0.05 / math.pi / ((z - 1j) * (z + 1j))
    assert abs(p(z) - expected) < 1e-16


def test_eval_density_beyond_pole_raises():
    s = lorentz_line()
    with pytest.raises(PoleError):
        eval_density(s.branches[0], 0.1 - 1.0j)


def test_polybump_and_gauss_values():
    assert PolyBump(2.0, 1, 2)(0.5, (0.0, 1.0)) == pytest.approx(2.0 * 0.5 * 0.25)
    assert Gauss(1.0, 0.0, 2.0)(2.0) == pytest.approx(math.exp(-1.0))


def test_matrix_density_stacks():
    G1 = np.array([[1.0, 0.2], [0.2, 0.5]])
    G2 = np.eye(2)
    s = make_scenario(np.zeros((2, 2)), branches=[((-1.0, 1.0), [(PolyBump(1.0), G1), (Gauss(0.5), G2)])])
    mu = np.array([0.0, 0.5 + 0.1j])
    vals = eval_density(s.branches[0], mu)
    assert vals.shape == (2, 2, 2)
    expected = (1 - mu[1] ** 2) * G1 + 0.5 * np.exp(-mu[1] ** 2) * G2
    np.testing.assert_allclose(vals[1], expected, atol=1e-15)


def test_a1_spectrum_groups_multiplicities():
    s = make_scenario(np.diag([0.2, 0.6, 0.2]))
    spec = a1_spectrum(s)
    assert [e.value for e in spec] == pytest.approx([0.2, 0.6])
    assert [e.multiplicity for e in spec] == [2, 1]
    P = spec[0].projector
    np.testing.assert_allclose(P, np.diag([1.0, 0.0, 1.0]), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=10_000))
def test_a1_spectrum_matches_characteristic_polynomial(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = a + a.conj().T
    spec = a1_spectrum(make_scenario(a))
    vals = np.repeat([e.value for e in spec], [e.multiplicity for e in spec])
    # roots of det(a - x) built from the Faddeev-LeVerrier coefficients
    roots = np.sort(np.roots(np.poly(a)).real)
    np.testing.assert_allclose(vals, roots, atol=1e-8 * max(1.0, spectral_norm(a)))


def test_scaled_multiplies_the_measure():
    s = make_scenario([[0.0]], atoms=[(2.0, [[0.1]])], branches=[((-1.0, 1.0), [(PolyBump(0.1), [[1.0]])])])
    t = s.scaled(0.5)
    assert t.atoms[0].weight[0, 0] == pytest.approx(0.05)
    assert eval_density(t.branches[0], 0.0)[0, 0] == pytest.approx(0.05)
