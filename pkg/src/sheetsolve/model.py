"""Scenario data: the A1 block, the discrete atoms of A0 and the AC branches.

The operator measure ``K_B(dmu)`` is never built from A0 and B explicitly.
Atoms carry their composite weights ``K_s`` and every AC branch carries a
matrix density assembled from scalar profiles with closed-form analytic
continuation, so continuation off the real axis is plain evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-12


class ScenarioError(ValueError):
    """Raised when a scenario violates one of its structural invariants."""


class PoleError(ValueError):
    """Raised when a density is evaluated at or beyond a registered pole."""


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value of a matrix (the operator 2-norm)."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def as_matrix(a, n: int | None = None) -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=complex))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ScenarioError(f"expected a square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise ScenarioError(f"expected a {n}x{n} matrix, got {m.shape}")
    return m


def _min_eig_ok(m: np.ndarray) -> bool:
    h = 0.5 * (m + m.conj().T)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, spectral_norm(m)):
        return False
    return float(np.linalg.eigvalsh(h).min()) >= -PSD_TOL * max(spectral_norm(m), 1e-300)


# ---------------------------------------------------------------------------
# scalar profiles


@dataclass(frozen=True)
class PolyBump:
    """``c (mu - a)^p (b - mu)^q`` on a finite interval ``(a, b)``; entire."""

    c: float
    p: int = 1
    q: int = 1

    kind = "polybump"

    def __call__(self, mu, interval):
        a, b = interval
        return self.c * (mu - a) ** self.p * (b - mu) ** self.q

    def poles(self) -> list[complex]:
        return []

    @property
    def tail_exponent(self) -> float:
        return 0.0

    def check(self) -> list[str]:
        errs = []
        if not self.c > 0:
            errs.append("PolyBump needs c > 0")
        if int(self.p) != self.p or int(self.q) != self.q or self.p < 1 or self.q < 1:
            errs.append("PolyBump exponents must be integers >= 1")
        return errs


@dataclass(frozen=True)
class Lorentz:
    """``(c w / pi) / ((mu - x0)^2 + w^2)``, with poles at ``x0 +- i w``."""

    c: float
    x0: float = 0.0
    w: float = 1.0

    kind = "lorentz"

    def __call__(self, mu, interval=None):
        d = mu - self.x0
        return (self.c * self.w / math.pi) / (d * d + self.w * self.w)

    def poles(self) -> list[complex]:
        return [complex(self.x0, self.w), complex(self.x0, -self.w)]

    @property
    def tail_exponent(self) -> float:
        return 2.0

    def tail_integral(self, cutoff: float) -> float:
        """Bound on ``int_T^inf |profile(t + i b)| dt`` for ``T > |x0|``, any real b."""
        u = cutoff - abs(self.x0)
        if u <= 0:
            return math.inf
        return self.c * self.w / (math.pi * u)

    def check(self) -> list[str]:
        errs = []
        if not self.c > 0:
            errs.append("Lorentz needs c > 0")
        if not self.w > 0:
            errs.append("Lorentz needs w > 0")
        return errs


@dataclass(frozen=True)
class Gauss:
    """``c exp(-((mu - x0) / s)^2)``; entire, finite intervals only."""

    c: float
    x0: float = 0.0
    s: float = 1.0

    kind = "gauss"

    def __call__(self, mu, interval=None):
        t = (mu - self.x0) / self.s
        return self.c * np.exp(-t * t)

    def poles(self) -> list[complex]:
        return []

    @property
    def tail_exponent(self) -> float:
        return 0.0

    def check(self) -> list[str]:
        errs = []
        if not self.c > 0:
            errs.append("Gauss needs c > 0")
        if not self.s > 0:
            errs.append("Gauss needs s > 0")
        return errs


ScalarProfile = Union[PolyBump, Lorentz, Gauss]


# ---------------------------------------------------------------------------
# densities, branches, scenarios


@dataclass(frozen=True, eq=False)
class AnalyticDensity:
    """Matrix density ``sum_j profile_j(mu) G_j`` on one AC branch."""

    terms: tuple[tuple[ScalarProfile, np.ndarray], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((p, np.asarray(g, dtype=complex)) for p, g in self.terms)
        )

    @property
    def tail_exponent(self) -> float:
        if not self.terms:
            return math.inf
        return min(p.tail_exponent for p, _ in self.terms)

    def poles(self) -> list[complex]:
        out: list[complex] = []
        for p, _ in self.terms:
            out.extend(p.poles())
        return out

    def strip_halfwidth(self) -> float:
        """Half-width of the largest pole-free horizontal strip around the axis."""
        poles = self.poles()
        if not poles:
            return math.inf
        return min(abs(z.imag) for z in poles)

    def norm_scale(self) -> float:
        return sum(spectral_norm(g) for _, g in self.terms)

    def scaled(self, t: float) -> "AnalyticDensity":
        return AnalyticDensity(tuple((p, t * g) for p, g in self.terms))


@dataclass(frozen=True, eq=False)
class ACBranch:
    interval: tuple[float, float]
    density: AnalyticDensity = field(default_factory=AnalyticDensity)

    def __post_init__(self):
        a, b = self.interval
        object.__setattr__(self, "interval", (float(a), float(b)))

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def finite(self) -> bool:
        return math.isfinite(self.a) and math.isfinite(self.b)

    def contains(self, x: float) -> bool:
        return self.a < x < self.b


@dataclass(frozen=True, eq=False)
class Atom:
    mu: float
    weight: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=complex))


@dataclass(frozen=True, eq=False)
class SpectralScenario:
    """Operator data standing in for ``(A0, A1, B)`` through ``K_B``.

    ``a1`` is the finite Hermitian entry, ``atoms`` the point part of
    ``sigma'(A0)`` with composite weights and ``branches`` the AC intervals
    with their analytic densities, ordered left to right.
    """

    a1: np.ndarray
    atoms: tuple[Atom, ...] = ()
    branches: tuple[ACBranch, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a1", as_matrix(self.a1))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def n(self) -> int:
        return self.a1.shape[0]

    @property
    def m(self) -> int:
        return len(self.branches)

    def scaled(self, t: float) -> "SpectralScenario":
        """Same scenario with the whole measure ``K_B`` multiplied by ``t``."""
        return SpectralScenario(
            self.a1,
            tuple(Atom(a.mu, t * a.weight) for a in self.atoms),
            tuple(ACBranch(b.interval, b.density.scaled(t)) for b in self.branches),
            self.name,
        )


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    a1_eigenvalues: list[float] = field(default_factory=list)
    poles: list[tuple[int, complex]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "a1_eigenvalues": list(self.a1_eigenvalues),
            "poles": [{"branch": k, "re": z.real, "im": z.imag} for k, z in self.poles],
        }


def validate_scenario(s: SpectralScenario) -> ValidationReport:
    """Collect every invariant violation of ``s`` instead of stopping at the first."""
    rep = ValidationReport()
    a1 = s.a1
    n = s.n
    dev = float(np.max(np.abs(a1 - a1.conj().T), initial=0.0))
    if dev > HERMITIAN_TOL:
        rep.errors.append(f"a1 is not Hermitian (max deviation {dev:.3e})")
        return rep
    eigs = np.linalg.eigvalsh(0.5 * (a1 + a1.conj().T))
    rep.a1_eigenvalues = [float(x) for x in eigs]

    for i, atom in enumerate(s.atoms):
        if atom.weight.shape != (n, n):
            rep.errors.append(f"atom {i}: weight has shape {atom.weight.shape}, expected {(n, n)}")
            continue
        if not _min_eig_ok(atom.weight):
            rep.errors.append(f"atom {i} at mu={atom.mu}: weight is not PSD")
        for b in s.branches:
            if b.a <= atom.mu <= b.b:
                rep.errors.append(f"atom {i} at mu={atom.mu}: atom inside AC interval {b.interval}")
        if np.any(np.abs(eigs - atom.mu) <= 1e-12 * max(1.0, abs(atom.mu))):
            rep.errors.append(f"atom {i} at mu={atom.mu}: coincides with an eigenvalue of a1")

    prev_b = -math.inf
    for k, br in enumerate(s.branches):
        a, b = br.interval
        if not a < b:
            rep.errors.append(f"branch {k}: empty interval {br.interval}")
        if a < prev_b or (k > 0 and a == prev_b and math.isinf(a)):
            rep.errors.append(f"branch {k}: intervals overlap or are not ordered")
        if math.isinf(a) and (a > 0 or k != 0):
            rep.errors.append(f"branch {k}: only the first interval may start at -inf")
        if math.isinf(b) and (b < 0 or k != s.m - 1):
            rep.errors.append(f"branch {k}: only the last interval may end at +inf")
        prev_b = b
        for j, (prof, g) in enumerate(br.density.terms):
            for msg in prof.check():
                rep.errors.append(f"branch {k} term {j}: {msg}")
            if g.shape != (n, n):
                rep.errors.append(f"branch {k} term {j}: matrix has shape {g.shape}, expected {(n, n)}")
            elif not _min_eig_ok(g):
                rep.errors.append(f"branch {k} term {j}: matrix is not PSD")
            if not br.finite and prof.kind != "lorentz":
                rep.errors.append(
                    f"branch {k} term {j}: {prof.kind} profile is inadmissible on an infinite interval"
                )
        if not br.finite and br.density.terms and not br.density.tail_exponent > 1:
            rep.errors.append(f"branch {k}: tail exponent must exceed 1 on an infinite interval")
        for z in br.density.poles():
            rep.poles.append((k, z))
            if abs(z.imag) == 0.0:
                rep.errors.append(f"branch {k}: density has a pole on the real axis")
        if not any(br.contains(x) for x in eigs):
            rep.warnings.append(f"branch {k}: branch meets no A1 eigenvalue")
    return rep


def ensure_valid(s: SpectralScenario) -> ValidationReport:
    rep = validate_scenario(s)
    if not rep.ok:
        raise ScenarioError("; ".join(rep.errors))
    return rep


def eval_density(b: ACBranch, mu) -> np.ndarray:
    """Matrix density of branch ``b`` at complex ``mu`` (scalar or 1-d array).

    For an array argument the result has shape ``(len(mu), n, n)``.
    """
    mu_arr = np.asarray(mu, dtype=complex)
    strip = b.density.strip_halfwidth()
    if np.any(np.abs(mu_arr.imag) >= strip):
        raise PoleError(f"mu outside the pole-free strip |Im mu| < {strip}")
    if not b.density.terms:
        raise ValueError("branch has no density terms; its density is identically zero")
    out = None
    for prof, g in b.density.terms:
        vals = np.asarray(prof(mu_arr, b.interval), dtype=complex)
        contrib = vals[..., None, None] * g
        out = contrib if out is None else out + contrib
    return out


def density_values(b: ACBranch, mu: np.ndarray, n: int) -> np.ndarray:
    """Like :func:`eval_density` on an array, returning zeros for an empty density."""
    mu = np.asarray(mu, dtype=complex)
    if not b.density.terms:
        return np.zeros(mu.shape + (n, n), dtype=complex)
    return eval_density(b, mu)


@dataclass(frozen=True)
class A1Eigenspace:
    value: float
    multiplicity: int
    vectors: np.ndarray  # columns

    @property
    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T


def a1_spectrum(s: SpectralScenario, tol: float = 1e-9) -> list[A1Eigenspace]:
    """Ascending eigenvalues of ``a1`` grouped into eigenspaces."""
    a1 = s.a1
    try:
        w, v = np.linalg.eigh(0.5 * (a1 + a1.conj().T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"Hermitian eigensolver failed: {exc}") from exc
    scale = tol * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    groups: list[A1Eigenspace] = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > scale:
            groups.append(A1Eigenspace(float(np.mean(w[start:i])), i - start, v[:, start:i]))
            start = i
    return groups


def discrete_variation(s: SpectralScenario) -> float:
    """Variation of ``K_B`` restricted to the atoms: ``sum_s ||K_s||``."""
    return float(sum(spectral_norm(a.weight) for a in s.atoms))


def pole_registry(s: SpectralScenario) -> list[tuple[int, complex]]:
    return [(k, z) for k, br in enumerate(s.branches) for z in br.density.poles()]


def make_scenario(
    a1,
    atoms: Sequence[tuple[float, np.ndarray]] = (),
    branches: Sequence[tuple[tuple[float, float], Sequence[tuple[ScalarProfile, np.ndarray]]]] = (),
    name: str = "",
) -> SpectralScenario:
    """Convenience constructor from plain tuples."""
    a1 = as_matrix(a1)
    return SpectralScenario(
        a1,
        tuple(Atom(mu, as_matrix(wt, a1.shape[0])) for mu, wt in atoms),
        tuple(
            ACBranch(iv, AnalyticDensity(tuple((p, as_matrix(g, a1.shape[0])) for p, g in terms)))
            for iv, terms in branches
        ),
        name,
    )
