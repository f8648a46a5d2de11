"""Eigen-analysis of ``H1^(l)``: classification, zero census of ``det M1``, Riesz projections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .contour import BoundaryError, Circle, Contour, integration_set_distance, pocket_branch
from .model import SpectralScenario, a1_spectrum, density_values, spectral_norm
from .solver import SheetSolution
from .transfer import M1_many

CLUSTER_TOL = 1e-8
REAL_TOL = 1e-9
DET_FLOOR = 1e-14

KINDS = ("real_isolated", "real_embedded", "resonance")


class ClusteringError(RuntimeError):
    """Eigenvalue clusters could not be separated unambiguously."""


class CensusError(ValueError):
    """``det M1`` nearly vanishes on the census boundary."""


@dataclass
class ClassifiedEigenvalue:
    value: complex
    algebraic_multiplicity: int
    geometric_multiplicity: int
    kind: str
    branch: int | None
    root_vectors: np.ndarray = field(repr=False)

    @property
    def is_real(self) -> bool:
        return self.kind != "resonance"

    def to_dict(self) -> dict:
        return {
            "re": float(self.value.real),
            "im": float(self.value.imag),
            "alg_mult": self.algebraic_multiplicity,
            "geo_mult": self.geometric_multiplicity,
            "class": self.kind,
            "branch": self.branch,
        }


def _clusters(vals: np.ndarray, tol: float) -> list[list[int]]:
    """Connected components of the relation ``|a - b| <= tol``."""
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: (vals[g[0]].real, vals[g[0]].imag))


def _classify_real(s: SpectralScenario, x: float) -> tuple[str, int | None]:
    for k, br in enumerate(s.branches):
        if br.a < x < br.b:
            return "real_embedded", k
    if any(abs(x - a.mu) <= CLUSTER_TOL * max(1.0, abs(x)) for a in s.atoms):
        return "real_embedded", None
    return "real_isolated", None


def sheet_spectrum(s: SpectralScenario, c: Contour | None, sol: SheetSolution) -> list[ClassifiedEigenvalue]:
    """Eigenvalues of ``H1^(l)`` grouped into clusters, with multiplicities and root vectors."""
    c = c if c is not None else sol.contour
    h = sol.h1
    scale = max(1.0, spectral_norm(h))
    vals = sla.eigvals(h)
    if not np.all(np.isfinite(vals)):
        raise np.linalg.LinAlgError("eigensolver returned non-finite values")
    tol = CLUSTER_TOL * scale
    out = []
    for g in _clusters(vals, tol):
        lam = complex(np.mean(vals[g]))
        # ambiguity: a cluster member must be clearly apart from every other eigenvalue
        others = np.delete(vals, g)
        if others.size and np.min(np.abs(others - lam)) <= 10 * tol:
            raise ClusteringError(f"eigenvalue cluster near {lam} is not separated")
        k = len(g)
        T, Z, sdim = sla.schur(h.astype(complex), output="complex", sort=lambda x: abs(x - lam) <= 2 * tol)
        if sdim != k:
            raise ClusteringError(f"Schur reordering found {sdim} eigenvalues near {lam}, expected {k}")
        roots = Z[:, :k]
        sv = np.linalg.svd(h - lam * np.eye(s.n), compute_uv=False)
        geo = int(min(k, max(1, np.sum(sv <= tol))))
        if abs(lam.imag) <= REAL_TOL * scale:
            lam = complex(lam.real, 0.0)
            kind, br = _classify_real(s, lam.real)
        else:
            kind = "resonance"
            try:
                br = pocket_branch(c, lam) if c is not None else None
            except BoundaryError:
                br = None
        out.append(ClassifiedEigenvalue(lam, k, geo, kind, br, roots))
    return out


def eigenvector_basis(ev: ClassifiedEigenvalue, h1: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the eigenspace (not the whole root space) of ``ev``."""
    _, sv, vh = np.linalg.svd(h1 - ev.value * np.eye(h1.shape[0]))
    return vh[-ev.geometric_multiplicity:].conj().T


# ---------------------------------------------------------------------------
# argument principle


def _boundary_points(boundary, M: int) -> np.ndarray:
    if isinstance(boundary, Circle):
        return boundary.nodes(M)[0]
    if isinstance(boundary, tuple) and len(boundary) == 2 and np.isscalar(boundary[1]):
        return Circle(complex(boundary[0]), float(boundary[1])).nodes(M)[0]
    pts = np.asarray(boundary, dtype=complex)
    return pts


def _refine_polygon(pts: np.ndarray) -> np.ndarray:
    mid = (pts + np.roll(pts, -1)) / 2
    out = np.empty(2 * len(pts), complex)
    out[0::2], out[1::2] = pts, mid
    return out


def m1_zero_census(
    s: SpectralScenario, c: Contour, boundary, M: int = 512, max_refine: int = 6
) -> int:
    """Number of zeros (with multiplicity) of ``det M1(., Gamma_l)`` inside ``boundary``.

    ``boundary`` is a :class:`Circle`, a ``(center, radius)`` pair or an
    array of points of a closed polygon traversed counter-clockwise.  The
    sampling is refined until no phase step exceeds ``pi/4``.
    """
    pts = _boundary_points(boundary, M)
    for _ in range(max_refine + 1):
        if min(integration_set_distance(c, complex(z)) for z in pts) <= 1e-12:
            raise BoundaryError("census boundary touches the integration set")
        det = np.linalg.det(M1_many(s, c, pts))
        scale = max(1.0, float(np.max(np.abs(det))))
        if np.min(np.abs(det)) <= DET_FLOOR * scale:
            raise CensusError(f"|det M1| = {np.min(np.abs(det)):.2e} on the boundary")
        dphi = np.angle(np.roll(det, -1) / det)
        if np.max(np.abs(dphi)) <= np.pi / 4:
            total = dphi.sum() / (2 * np.pi)
            count = int(round(total))
            if abs(total - count) > 1e-6:
                raise CensusError(f"winding number {total} is not an integer")
            return count
        pts = _refine_polygon(pts)
    raise CensusError("phase of det M1 could not be resolved on the boundary")


# ---------------------------------------------------------------------------
# Riesz projections


@dataclass
class ClusterProjections:
    circles: list[Circle]
    index: list[tuple[int, ...]]
    Q: list[np.ndarray]
    P: list[np.ndarray]
    rank_Q: list[int]
    rank_P: list[int]
    r: float
    i0: int
    r_min: float

    @property
    def sum_error(self) -> float:
        return spectral_norm(sum(self.Q) - np.eye(self.Q[0].shape[0]))

    @property
    def orthogonality_error(self) -> float:
        worst = 0.0
        for i, qi in enumerate(self.Q):
            for j, qj in enumerate(self.Q):
                target = qi if i == j else 0.0
                worst = max(worst, spectral_norm(qi @ qj - target))
        return worst

    @property
    def distances(self) -> list[float]:
        return [spectral_norm(q - p) for q, p in zip(self.Q, self.P)]

    @property
    def quadratic_closeness(self) -> float:
        return float(sum(np.linalg.norm(q - p, "fro") ** 2 for q, p in zip(self.Q, self.P)))

    @property
    def separated(self) -> bool:
        return 2 * self.r > 4 * self.r_min


def _projection_rank(q: np.ndarray) -> int:
    # nonzero singular values of a projection are >= 1
    return int(np.sum(np.linalg.svd(q, compute_uv=False) > 0.5))


def riesz_projections(s: SpectralScenario, sol: SheetSolution, r: float | None = None, M: int = 256) -> ClusterProjections:
    """Riesz projections of ``H1^(l)`` over circles built from the gaps of ``sigma(A1)``.

    Eigenvalues ``lam_i`` with ``lam_i - lam_{i-1} > 2r`` for every ``i >= i0``
    get their own circle of radius ``r``; the head ``lam_1..lam_{i0-1}`` shares
    one circle.  The default ``r`` is ``2.2 r_min`` so that ``2r > 4 r_min``.
    """
    spec = a1_spectrum(s)
    lam = np.array([e.value for e in spec])
    r_min = sol.certificate.r_min
    if r is None:
        if r_min > 0:
            r = 2.2 * r_min
        else:
            r = 0.25 * float(np.min(np.diff(lam))) if len(lam) > 1 else 1.0
    if r <= r_min:
        raise ValueError(f"separation radius r={r} must exceed r_min={r_min}")
    # 1-based i0 in the usual numbering; here a 0-based start of the tail
    start = len(lam) - 1
    while start >= 1 and lam[start] - lam[start - 1] > 2 * r:
        start -= 1
    groups = [tuple(range(0, start + 1))] + [(i,) for i in range(start + 1, len(lam))]
    circles = []
    for g in groups:
        lo, hi = lam[g[0]], lam[g[-1]]
        circles.append(Circle(complex((lo + hi) / 2), (hi - lo) / 2 + r))
    for a, b in zip(circles, circles[1:]):
        if abs(b.center - a.center) <= a.radius + b.radius:
            raise ValueError("Riesz circles overlap")
    h = sol.h1
    eig = np.linalg.eigvals(h)
    n = s.n
    Q, P = [], []
    for circ, g in zip(circles, groups):
        if np.min(np.abs(np.abs(eig - circ.center) - circ.radius)) <= 1e-8 * max(1.0, circ.radius):
            raise ValueError(f"an eigenvalue of H1 lies on the circle at {circ.center}")
        z, dz = circ.nodes(M)
        res = np.linalg.inv(h[None] - z[:, None, None] * np.eye(n))
        Q.append(-np.tensordot(dz, res, axes=1) / (2j * np.pi))
        P.append(sum(spec[i].projector for i in g))
    return ClusterProjections(
        circles, groups, Q, P, [_projection_rank(q) for q in Q], [_projection_rank(p) for p in P], r, start + 1, r_min
    )


# ---------------------------------------------------------------------------
# global checks


def hausdorff(a, b) -> float:
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def eigen_multiset(evs: list[ClassifiedEigenvalue]) -> np.ndarray:
    return np.array([e.value for e in evs for _ in range(e.algebraic_multiplicity)], dtype=complex)


def localization_excess(s: SpectralScenario, sol: SheetSolution, evs: list[ClassifiedEigenvalue]) -> float:
    """``max_lambda dist(lambda, sigma(A1)) - r_min``; non-positive when localized."""
    lam = np.array([e.value for e in a1_spectrum(s)])
    worst = max(float(np.min(np.abs(lam - e.value))) for e in evs)
    return worst - sol.certificate.r_min


def completeness(evs: list[ClassifiedEigenvalue]) -> tuple[int, float]:
    """Numerical rank of the stacked root vectors and ``s_min / s_max``."""
    V = np.hstack([e.root_vectors for e in evs])
    sv = np.linalg.svd(V, compute_uv=False)
    ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    return int(np.sum(sv > 1e-8 * sv[0])), ratio


@dataclass
class RealPointEntry:
    value: float
    kind: str
    branch: int | None
    multiplicity: int
    kprime_residual: float | None
    kprime_tolerance: float | None
    omega_imag: float
    omega_real_min: float
    lift_residual: float | None = None
    gram_error: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RealPointReport:
    entries: list[RealPointEntry]
    cross_orthogonality: float | None = None
    oracle_tolerance: float | None = None

    @property
    def omega_ok(self) -> bool:
        return all(e.omega_imag <= REAL_TOL and e.omega_real_min >= -REAL_TOL for e in self.entries)

    @property
    def kprime_ok(self) -> bool:
        return all(e.kprime_residual is None or e.kprime_residual <= e.kprime_tolerance for e in self.entries)


def real_point_analysis(
    s: SpectralScenario,
    c: Contour,
    sol: SheetSolution,
    omega: np.ndarray,
    oracle=None,
    rng: np.random.Generator | None = None,
    samples: int = 100,
    evs: list[ClassifiedEigenvalue] | None = None,
) -> RealPointReport:
    """Checks at the real eigenvalues: ``K'_B(lambda) psi = 0`` when embedded, sign of the
    ``Omega`` form, and (with a discretized oracle) lifting and the Bari Gram matrix."""
    rng = rng or np.random.default_rng(0)
    evs = evs if evs is not None else sheet_spectrum(s, c, sol)
    entries = []
    lifted = []
    for ev in evs:
        if not ev.is_real:
            continue
        psi = eigenvector_basis(ev, sol.h1)
        kres = ktol = None
        if ev.kind == "real_embedded" and ev.branch is not None:
            br = s.branches[ev.branch]
            kp = density_values(br, np.array([ev.value.real]), s.n)[0]
            kres = float(max(np.linalg.norm(kp @ psi[:, j]) for j in range(psi.shape[1])))
            ktol = 1e-8 * spectral_norm(kp)
        coef = rng.standard_normal((samples, psi.shape[1])) + 1j * rng.standard_normal((samples, psi.shape[1]))
        u = coef @ psi.T
        form = np.einsum("ki,ij,kj->k", u.conj(), omega, u)
        nrm = np.einsum("ki,ki->k", u.conj(), u).real
        entry = RealPointEntry(
            float(ev.value.real),
            ev.kind,
            ev.branch,
            ev.algebraic_multiplicity,
            kres,
            ktol,
            float(np.max(np.abs(form.imag) / nrm)),
            float(np.min(form.real / nrm)),
        )
        if oracle is not None:
            from .oracle import lift_eigenvector

            cols = []
            worst = 0.0
            for j in range(psi.shape[1]):
                psi0, res = lift_eigenvector(oracle, ev.value.real, psi[:, j])
                worst = max(worst, res)
                cols.append(np.concatenate([psi0, psi[:, j]]))
            big = np.array(cols).T
            # orthonormalize the lifts; carry the same change of basis to psi
            R = np.linalg.qr(big, mode="r")
            T = np.linalg.inv(R)
            phi = psi @ T
            gram = phi.conj().T @ (np.eye(s.n) + omega) @ phi
            entry.lift_residual = worst
            entry.gram_error = spectral_norm(gram.conj().T - np.eye(psi.shape[1]))
            lifted.append(big @ T)
        entries.append(entry)
    cross = None
    if len(lifted) > 1:
        cross = 0.0
        for i in range(len(lifted)):
            for j in range(i + 1, len(lifted)):
                cross = max(cross, spectral_norm(lifted[i].conj().T @ lifted[j]))
    return RealPointReport(entries, cross, getattr(oracle, "error_estimate", None))
