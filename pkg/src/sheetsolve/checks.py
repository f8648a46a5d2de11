"""Theorem-check matrix: every invariant evaluated with its measured value and tolerance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .contour import (
    BoundaryError,
    Circle,
    Contour,
    QuadratureRule,
    build_contour,
    contour_for_sheet,
    integration_set_distance,
    pocket_branch,
    reflect_contour,
    sheet_str,
)
from .factor import adjoint_residual, compute_omega, eval_W1, gamma_circles, moment_functionals
from .io import ScenarioFile, default_depths, resolve_contour
from .model import SpectralScenario, a1_spectrum, density_values, ensure_valid, spectral_norm
from .oracle import discretize_full, spectrum_window
from .solver import SheetSolution, depth_family, solve_all_sheets, solve_basic_equation, solvability_report
from .spectral import (
    completeness,
    eigen_multiset,
    hausdorff,
    localization_excess,
    m1_zero_census,
    real_point_analysis,
    riesz_projections,
    sheet_spectrum,
)
from .transfer import eval_M1_physical, eval_M1_sheet

RESIDUE_RULE = QuadratureRule(panels=32, ray_panel=0.0625)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    relation: str = "<="
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": _finite(self.value),
            "tolerance": _finite(self.tolerance),
            "relation": self.relation,
            "detail": self.detail,
        }


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def le(name, value, tol, detail="") -> CheckResult:
    return CheckResult(name, bool(value <= tol), float(value), float(tol), "<=", detail)


def lt(name, value, tol, detail="") -> CheckResult:
    return CheckResult(name, bool(value < tol), float(value), float(tol), "<", detail)


def ge(name, value, tol, detail="") -> CheckResult:
    return CheckResult(name, bool(value >= tol), float(value), float(tol), ">=", detail)


def eq(name, value, target, detail="") -> CheckResult:
    return CheckResult(name, bool(value == target), float(value), float(target), "==", detail)


# ---------------------------------------------------------------------------
# reusable measurements


def with_rule(c: Contour, s: SpectralScenario, rule: QuadratureRule) -> Contour:
    return build_contour(s, c.sheet, c.paths, rule)


def contour_depth(c: Contour) -> float:
    return max(abs(v.imag) for p in c.paths for v in p.vertices)


def sample_pocket(c: Contour, rng: np.random.Generator, count: int, margin: float = 0.1) -> list[tuple[complex, int]]:
    """Random points of ``D(Gamma_l)`` at least ``margin`` away from its boundary."""
    boxes = []
    for k, p in enumerate(c.paths):
        re = [v.real for v in p.vertices]
        lo = min(re) - (3.0 if p.left_ray else 0.0)
        hi = max(re) + (3.0 if p.right_ray else 0.0)
        depth = max(abs(v.imag) for v in p.vertices)
        if depth > 2 * margin:
            boxes.append((k, lo, hi, depth, c.sheet[k]))
    if not boxes:
        return []
    out: list[tuple[complex, int]] = []
    tries = 0
    while len(out) < count and tries < 200 * count:
        tries += 1
        k, lo, hi, depth, sign = boxes[rng.integers(len(boxes))]
        z = complex(rng.uniform(lo, hi), sign * rng.uniform(margin, depth - margin))
        try:
            if pocket_branch(c, z) != k:
                continue
        except BoundaryError:
            continue
        if integration_set_distance(c, z) < margin:
            continue
        out.append((z, k))
    return out


def residue_relation(
    s: SpectralScenario, c: Contour, rng: np.random.Generator, count: int = 100, margin: float = 0.1
) -> tuple[float, int]:
    """``max ||M1(z,Gamma_l) - M1(z) - 2 pi i l_k K'_B(z)||`` over random pocket points."""
    fine = with_rule(c, s, RESIDUE_RULE)
    pts = sample_pocket(fine, rng, count, margin)
    worst = 0.0
    for z, k in pts:
        cont = eval_M1_sheet(s, fine, z).value
        phys = eval_M1_physical(s, z, RESIDUE_RULE).value
        kp = density_values(s.branches[k], np.array([z]), s.n)[0]
        worst = max(worst, spectral_norm(cont - phys - 2j * np.pi * fine.sheet[k] * kp))
    return worst, len(pts)


def factorization_grid(s: SpectralScenario, c: Contour, sol: SheetSolution, size: int = 10):
    """Residual of ``M1 = W1 (H1 - z)`` on a grid, and the ``||W1^-1||`` bound on ``|z - lambda| = d0/2``."""
    lam = [e.value for e in a1_spectrum(s)]
    d0 = sol.certificate.d0
    xs = np.linspace(min(lam) - d0, max(lam) + d0, size)
    ys = np.linspace(-d0, d0, size)
    worst_res = worst_err = 0.0
    pts = [complex(x, y) for x in xs for y in ys]
    theta = 2 * np.pi * (np.arange(16) + 0.5) / 16
    ring = [complex(l + 0.999999 * d0 / 2 * np.exp(1j * t)) for l in lam for t in theta]
    worst_ratio = 0.0
    for z in pts + ring:
        if integration_set_distance(c, z) < 1e-6:
            continue
        rep = eval_W1(s, c, sol, z)
        worst_res = max(worst_res, rep.residual)
        worst_err = max(worst_err, rep.quadrature_error)
        if rep.w1_inverse_norm is not None:
            worst_ratio = max(worst_ratio, rep.w1_inverse_norm / rep.bound)
    return worst_res, worst_err, worst_ratio


def oracle_windows(s: SpectralScenario, lam: float) -> tuple[float, float]:
    """Largest open interval around ``lam`` free of atoms and branches."""
    lo, hi = -math.inf, math.inf
    for br in s.branches:
        if br.b <= lam:
            lo = max(lo, br.b)
        elif br.a >= lam:
            hi = min(hi, br.a)
    for a in s.atoms:
        if a.mu < lam:
            lo = max(lo, a.mu)
        elif a.mu > lam:
            hi = min(hi, a.mu)
    return lo, hi


def oracle_match(s: SpectralScenario, lam: float, N: int) -> tuple[float, float]:
    """Distance from ``lam`` to the nearest eigenvalue of the discretized operator in its gap."""
    lo, hi = oracle_windows(s, lam)
    lo = max(lo, lam - 10.0)
    hi = min(hi, lam + 10.0)
    h = discretize_full(s, N)
    w, _ = spectrum_window(h, lo, hi)
    if w.size == 0:
        return math.inf, h.error_estimate
    return float(np.min(np.abs(w - lam))), h.error_estimate


def census_circles(s: SpectralScenario, sol: SheetSolution) -> tuple[list[Circle], list[Circle]]:
    """Circles of radius between ``r_min`` and ``d0/2`` around every ``A1`` eigenvalue,
    and small circles in the eigenvalue-free annulus."""
    d0, r_min = sol.certificate.d0, sol.certificate.r_min
    lam = [e.value for e in a1_spectrum(s)]
    gaps = np.diff(lam) if len(lam) > 1 else np.array([math.inf])
    half = min(d0 / 2, float(np.min(gaps)) / 2)
    mid = (r_min + half) / 2
    full = [Circle(complex(l), mid) for l in lam]
    small = []
    rad = 0.45 * (half - r_min)
    for l in lam:
        for t in 2 * np.pi * np.arange(8) / 8:
            small.append(Circle(complex(l + mid * np.exp(1j * t)), rad))
    return full, small


# ---------------------------------------------------------------------------
# the full matrix


@dataclass
class VerifyReport:
    scenario: str
    sheet: str
    seed: int
    contour_source: str
    checks: list[CheckResult] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "sheet": self.sheet,
            "seed": self.seed,
            "contour_source": self.contour_source,
            "all_passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "info": self.info,
        }


def _guard(report: VerifyReport, name: str, fn: Callable[[], list[CheckResult]]) -> None:
    try:
        report.checks.extend(fn())
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        report.checks.append(CheckResult(name, False, math.nan, math.nan, "error", f"{type(exc).__name__}: {exc}"))


def verify(
    sf: ScenarioFile,
    sheet: str,
    *,
    seed: int = 0,
    tol: float = 1e-12,
    oracle_N: int = 512,
    warm_starts: int = 20,
) -> VerifyReport:
    """Run every check for one sheet.  Solvability and convergence failures propagate."""
    s = sf.scenario
    ensure_valid(s)
    rng = np.random.default_rng(seed)
    c, source = resolve_contour(sf, sheet)
    rep = VerifyReport(s.name, c.label, seed, source)
    n = s.n

    sol = solve_basic_equation(s, c, tol=tol)
    cert = sol.certificate
    rep.info["certificate"] = cert.to_dict()
    c_ref = reflect_contour(c)
    sol_ref = solve_basic_equation(s, c_ref, tol=tol)

    rep.checks += [
        lt("solvability: V0 < d0^2/4", cert.v0, cert.d0**2 / 4),
        le("solver: fixed-point residual", sol.final_residual, tol),
        le("solver: max step ratio <= q + 0.05", sol.max_ratio, cert.rate + 0.05),
        le("solver: ||X|| <= r_min + 10 tol", spectral_norm(sol.x), cert.r_min + 10 * tol),
    ]

    def independence():
        # among clearly different depths, compare with the best-resolved solution
        d_c = contour_depth(c)
        others = []
        for a in depth_family(s, c.sheet, default_depths(s, 7), c.rule):
            if abs(contour_depth(a) - d_c) < 0.1 * d_c or not solvability_report(s, a).condition_ok:
                continue
            others.append(solve_basic_equation(s, a, tol=tol))
        if not others:
            return [CheckResult("solver: contour independence", False, math.nan, 1e-9, "<=", "no second contour")]
        other = min(others, key=lambda o: o.quadrature_error)
        budget = sol.quadrature_error + other.quadrature_error
        detail = f"depths {d_c:.3g} vs {contour_depth(other.contour):.3g}, quadrature budget {budget:.2e}"
        return [le("solver: contour independence", spectral_norm(sol.x - other.x), 1e-9, detail)]

    _guard(rep, "solver: contour independence", independence)

    def uniqueness():
        worst = 0.0
        for _ in range(warm_starts):
            x0 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            x0 *= 0.9 * cert.r_max * rng.uniform() / spectral_norm(x0)
            other = solve_basic_equation(s, c, tol=tol, max_iter=1000, x0=x0)
            worst = max(worst, spectral_norm(other.x - sol.x))
        return [le("solver: uniqueness within r_max (warm starts)", worst, 10 * tol * max(1.0, spectral_norm(sol.x)) + 1e-13)]

    if warm_starts:
        _guard(rep, "solver: uniqueness within r_max (warm starts)", uniqueness)

    def residue():
        worst, count = residue_relation(s, c, rng, 100)
        return [le("transfer: residue relation in the pocket", worst, 1e-9, f"{count} points")]

    _guard(rep, "transfer: residue relation in the pocket", residue)

    def factorization():
        res, err, ratio = factorization_grid(s, c, sol)
        return [
            le("factor: M1 = W1 (H1 - z) on a grid", res, 1e-9, f"quadrature estimate {err:.2e}"),
            le("factor: ||W1^-1|| / bound in O_{d0/2}", ratio, 1.0 + 1e-12),
        ]

    _guard(rep, "factor: factorization", factorization)

    def adjoint():
        worst = 0.0
        for _ in range(10):
            lam = [e.value for e in a1_spectrum(s)]
            z = complex(rng.uniform(min(lam) - 1, max(lam) + 1), rng.uniform(-1, 1))
            if min(integration_set_distance(c, z), integration_set_distance(c_ref, np.conj(z))) < 1e-6:
                continue
            worst = max(worst, adjoint_residual(s, c, c_ref, sol, sol_ref, z))
        return [le("factor: adjoint identity", worst, 1e-9)]

    _guard(rep, "factor: adjoint identity", adjoint)

    om = compute_omega(s, c, sol, sol_ref)
    om_ref = compute_omega(s, c_ref, sol_ref, sol)
    rep.checks += [
        CheckResult("factor: ||Omega|| < V0/(d0/2)^2 and < 1", om.bound_ok, om.norm, om.bound, "<"),
        le("factor: Omega(-l) = Omega(l)*", spectral_norm(om_ref.value - om.value.conj().T), 1e-9),
    ]

    def moments():
        p0, p1 = moment_functionals(s, c, sol)
        inv = np.linalg.inv(np.eye(n) + om.value)
        return [
            le("factor: P0 = (I + Omega)^-1", spectral_norm(p0 - inv), 1e-8),
            le("factor: P1 = H1(l) (I + Omega)^-1", spectral_norm(p1 - sol.h1 @ inv), 1e-8),
            le("factor: P1 = (I + Omega)^-1 H1(-l)*", spectral_norm(p1 - inv @ sol_ref.h1.conj().T), 1e-8),
        ]

    _guard(rep, "factor: moment identities", moments)

    evs = sheet_spectrum(s, c, sol)
    evs_ref = sheet_spectrum(s, c_ref, sol_ref)
    rep.info["eigenvalues"] = [e.to_dict() for e in evs]

    bad_winding = sum(1 for e in evs if e.kind == "resonance" and e.branch is None)
    rep.checks += [
        le("spectral: localization in O_{r_min}(A1)", localization_excess(s, sol, evs), 1e-9),
        eq("spectral: resonances inside D(Gamma_l)", bad_winding, 0),
        le("spectral: sigma(H1(l)) = conj sigma(H1(-l))", hausdorff(eigen_multiset(evs), np.conj(eigen_multiset(evs_ref))), 1e-8),
    ]

    def cross_sheet():
        sols = solve_all_sheets(s, c, tol=tol)
        spectra = {sh: sheet_spectrum(s, so.contour, so) for sh, so in sols.items()}
        reals = {sh: sorted((e.value.real, e.algebraic_multiplicity) for e in ev if e.is_real) for sh, ev in spectra.items()}
        base = reals[tuple(c.sheet)]
        worst = 0.0
        for r in reals.values():
            if [m for _, m in r] != [m for _, m in base]:
                worst = math.inf
                break
            worst = max([worst] + [abs(a - b) for (a, _), (b, _) in zip(r, base)])
        pocket = 0.0
        sheets = list(sols)
        for k in range(s.m):
            for i, a in enumerate(sheets):
                for b in sheets[i + 1:]:
                    if a[k] != b[k]:
                        continue
                    pa = [e.value for e in spectra[a] if e.kind == "resonance" and e.branch == k]
                    pb = [e.value for e in spectra[b] if e.kind == "resonance" and e.branch == k]
                    pocket = max(pocket, hausdorff(pa, pb))
        return [
            le("spectral: real spectrum agrees on all sheets", worst, 1e-8),
            le("spectral: pocket spectra agree for shared l_k", pocket, 1e-8),
        ]

    _guard(rep, "spectral: cross-sheet", cross_sheet)

    def census():
        full, small = census_circles(s, sol)
        mism = 0
        for circ in full:
            inside = sum(e.algebraic_multiplicity for e in evs if circ.contains(e.value))
            mism += abs(m1_zero_census(s, c, circ) - inside)
        empty = sum(abs(m1_zero_census(s, c, circ)) for circ in small)
        return [
            eq("spectral: zero census matches multiplicities", mism, 0),
            eq("spectral: zero census of eigenvalue-free circles", empty, 0),
        ]

    _guard(rep, "spectral: zero census", census)

    rank, ratio = completeness(evs)
    rep.checks += [eq("spectral: root vectors span C^n", rank, n), ge("spectral: s_min / s_max of root vectors", ratio, 1e-8)]

    def riesz():
        pr = riesz_projections(s, sol)
        out = [
            le("spectral: sum of Riesz projections = I", pr.sum_error, 1e-9),
            le("spectral: Q_i Q_j = delta_ij Q_i", pr.orthogonality_error, 1e-10),
            lt("spectral: max ||Q_i - P_i||", max(pr.distances), 1.0),
        ]
        if pr.separated:
            out.append(eq("spectral: rank Q_i = rank P_i", sum(a != b for a, b in zip(pr.rank_Q, pr.rank_P)), 0))
        rep.info["riesz"] = {
            "r": pr.r,
            "i0": pr.i0,
            "rank_Q": pr.rank_Q,
            "rank_P": pr.rank_P,
            "quadratic_closeness": pr.quadratic_closeness,
        }
        return out

    _guard(rep, "spectral: Riesz projections", riesz)

    def real_points():
        h = discretize_full(s, oracle_N)
        rp = real_point_analysis(s, c, sol, om.value, oracle=h, rng=rng, evs=evs)
        oracle_tol = max(10 * h.error_estimate, 1e-6)
        out = []
        for e in rp.entries:
            tag = f"lambda={e.value:.10g}"
            out.append(le(f"real point {tag}: |Im <Omega u,u>| / |u|^2", e.omega_imag, 1e-9))
            out.append(ge(f"real point {tag}: Re <Omega u,u> / |u|^2", e.omega_real_min, -1e-9))
            if e.kprime_residual is not None:
                out.append(le(f"real point {tag}: ||K'(lambda) psi||", e.kprime_residual, e.kprime_tolerance))
            if e.lift_residual is not None:
                out.append(le(f"real point {tag}: lifted eigenvector residual", e.lift_residual, oracle_tol))
                out.append(le(f"real point {tag}: Bari Gram matrix", e.gram_error, oracle_tol))
            if e.kind == "real_isolated":
                d, est = oracle_match(s, e.value, oracle_N)
                out.append(le(f"real point {tag}: oracle eigenvalue match", d, oracle_tol, f"estimate {est:.2e}"))
        if rp.cross_orthogonality is not None:
            out.append(le("real points: lifted eigenvectors orthogonal", rp.cross_orthogonality, oracle_tol))
        return out

    _guard(rep, "real points", real_points)
    return rep
