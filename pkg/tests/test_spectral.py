import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheetsolve.contour import BoundaryError, Circle, reflect_contour
from sheetsolve.factor import compute_omega
from sheetsolve.model import make_scenario
from sheetsolve.scenarios import l1_resonance
from sheetsolve.solver import SheetSolution, certificate_from, solve_basic_equation
from sheetsolve.spectral import (
    CensusError,
    ClusteringError,
    completeness,
    eigen_multiset,
    eigenvector_basis,
    hausdorff,
    localization_excess,
    m1_zero_census,
    real_point_analysis,
    riesz_projections,
    sheet_spectrum,
)


def bare_solution(h1):
    h1 = np.asarray(h1, dtype=complex)
    n = h1.shape[0]
    return SheetSolution((), np.zeros_like(h1), h1, certificate_from(0.0, 1.0), 0, 0.0, 0.0)


def test_l1_single_resonance(solved):
    sf, c, sol = solved("l1")
    evs = sheet_spectrum(sf.scenario, c, sol)
    assert len(evs) == 1
    ev = evs[0]
    assert ev.kind == "resonance" and ev.branch == 0
    assert abs(ev.value - l1_resonance()) < 1e-10
    assert ev.to_dict()["class"] == "resonance"


def test_zero_coupling_eigenvalues_are_a1(solved):
    sf, c, sol = solved("zero", "+")
    evs = sheet_spectrum(sf.scenario, c, sol)
    assert [e.value for e in evs] == [0.2, 0.6]
    assert [(e.algebraic_multiplicity, e.geometric_multiplicity) for e in evs] == [(2, 2), (1, 1)]
    assert all(e.kind == "real_embedded" and e.branch == 0 for e in evs)


def test_jordan_block_multiplicities():
    s = make_scenario(np.zeros((2, 2)))
    evs = sheet_spectrum(s, None, bare_solution([[0.1, 1.0], [0.0, 0.1]]))
    assert len(evs) == 1
    assert evs[0].algebraic_multiplicity == 2 and evs[0].geometric_multiplicity == 1
    assert evs[0].kind == "real_isolated"
    rank, _ = completeness(evs)
    assert rank == 2
    assert eigenvector_basis(evs[0], np.array([[0.1, 1.0], [0.0, 0.1]])).shape == (2, 1)


def test_ambiguous_cluster_raises():
    s = make_scenario(np.zeros((2, 2)))
    with pytest.raises(ClusteringError):
        sheet_spectrum(s, None, bare_solution(np.diag([0.0, 5e-8])))


def test_atom_eigenvalue_is_embedded_without_branch():
    s = make_scenario([[2.0]], atoms=[(2.0 + 1e-12, [[0.0]])])
    evs = sheet_spectrum(s, None, bare_solution([[2.0]]))
    assert evs[0].kind == "real_embedded" and evs[0].branch is None


def test_census_counts_l1_resonance(solved):
    sf, c, sol = solved("l1")
    s = sf.scenario
    lam = l1_resonance()
    assert m1_zero_census(s, c, Circle(lam, 0.1)) == 1
    assert m1_zero_census(s, c, (lam, 0.1)) == 1
    d0 = sol.certificate.d0
    # eigenvalue-free disks inside the d0/2 vicinity of 0
    for center in [0.17 + 0.0j, -0.17 + 0.0j, 0.15j, -0.1 - 0.16j]:
        assert m1_zero_census(s, c, Circle(center, 0.06)) == 0
    assert abs(0.17) + 0.06 < d0 / 2


def test_census_on_polygon(solved):
    sf, c, sol = solved("l1")
    square = np.array([0.1 + 0.1j, -0.1 + 0.1j, -0.1 - 0.1j, 0.1 - 0.1j])
    assert m1_zero_census(sf.scenario, c, square) == 1


def test_census_boundary_through_zero_raises(solved):
    sf, c, _ = solved("l1")
    lam = l1_resonance()
    with pytest.raises(CensusError):
        m1_zero_census(sf.scenario, c, Circle(lam + 0.05, 0.05), M=512)


def test_census_boundary_touching_path_raises(solved):
    sf, c, _ = solved("l1")
    with pytest.raises(BoundaryError):
        m1_zero_census(sf.scenario, c, Circle(0j, 0.5), M=8)


@pytest.mark.parametrize("name", ["polybump2", "gap3", "decoupled3", "halfline2"])
def test_census_matches_multiplicities(solved, name):
    sf, c, sol = solved(name)
    s = sf.scenario
    evs = sheet_spectrum(s, c, sol)
    for lam in np.linalg.eigvalsh(s.a1):
        circ = Circle(complex(lam), 0.5 * (sol.certificate.r_min + min(sol.certificate.d0 / 2, 0.3)))
        inside = sum(e.algebraic_multiplicity for e in evs if circ.contains(e.value))
        assert m1_zero_census(s, c, circ) == inside


@pytest.mark.parametrize("name", ["polybump2", "gap3", "decoupled3", "halfline2", "l1"])
def test_localization_and_completeness(solved, name):
    sf, c, sol = solved(name)
    evs = sheet_spectrum(sf.scenario, c, sol)
    assert localization_excess(sf.scenario, sol, evs) <= 1e-9
    rank, ratio = completeness(evs)
    assert rank == sf.scenario.n and ratio > 1e-8


def test_riesz_zero_coupling_recovers_spectral_projections(solved):
    sf, c, sol = solved("zero", "+")
    pr = riesz_projections(sf.scenario, sol)
    assert pr.sum_error < 1e-12
    assert max(pr.distances) < 1e-12
    assert pr.rank_Q == [2, 1]


@pytest.mark.parametrize("name", ["polybump2", "gap3", "decoupled3", "halfline2"])
def test_riesz_projection_algebra(solved, name):
    sf, c, sol = solved(name)
    pr = riesz_projections(sf.scenario, sol)
    assert pr.sum_error <= 1e-9
    assert pr.orthogonality_error <= 1e-10
    assert max(pr.distances) < 1.0
    assert pr.separated
    assert pr.rank_Q == pr.rank_P


def test_riesz_radius_must_exceed_rmin(solved):
    sf, c, sol = solved("gap3")
    with pytest.raises(ValueError):
        riesz_projections(sf.scenario, sol, r=0.5 * sol.certificate.r_min)


def test_decoupled_real_point(solved):
    sf, c, sol = solved("decoupled3")
    s = sf.scenario
    sol_r = solve_basic_equation(s, reflect_contour(c))
    om = compute_omega(s, c, sol, sol_r)
    rp = real_point_analysis(s, c, sol, om.value)
    emb = [e for e in rp.entries if e.kind == "real_embedded"]
    assert len(emb) == 1 and emb[0].value == 0.2 and emb[0].branch == 0
    assert emb[0].kprime_residual == 0.0
    assert rp.omega_ok and rp.kprime_ok


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=6),
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=6),
)
def test_hausdorff_is_symmetric_metric(a, b):
    assert hausdorff(a, b) == hausdorff(b, a)
    assert hausdorff(a, a) == 0.0
    assert hausdorff(a, b) >= 0.0


def test_eigen_multiset_repeats(solved):
    sf, c, sol = solved("zero", "+")
    ms = eigen_multiset(sheet_spectrum(sf.scenario, c, sol))
    assert sorted(ms.real) == [0.2, 0.2, 0.6]
