"""Finite Hermitian stand-in for the full two-channel operator.

The channel-0 part is replaced by point masses at Gauss-Legendre nodes:
each node carries the rank-revealing factor of ``w_q K'_B(mu_q)`` as
coupling columns, and atoms are kept exactly.  The Schur complement of
the resulting matrix is a quadrature of ``M1`` on the physical sheet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contour import _gl
from .model import ACBranch, AnalyticDensity, Atom, SpectralScenario, density_values, ensure_valid, spectral_norm

KEEP = 1e-14
DENSE_LIMIT = 3000
PANEL_ORDER = 8
TEST_POINTS = (2j, 1 + 1j, -1 + 1j, 0.5 + 2j, -3 + 0.5j)


class LiftError(ValueError):
    """``R0(lambda) B01 psi1`` blows up at a node that ``psi1`` does not annihilate."""


@dataclass(eq=False)
class DiscretizedH:
    sparse: sp.csr_matrix
    a0: np.ndarray  # diagonal of the channel-0 block
    b01: np.ndarray  # n0 x n
    a1: np.ndarray
    node_mu: np.ndarray
    node_branch: np.ndarray  # -1 for atoms
    N: int
    error_estimate: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def matrix(self) -> np.ndarray:
        """Dense copy of the Hermitian matrix (channel 0 first, then channel 1)."""
        return self.sparse.toarray()

    @property
    def size(self) -> int:
        return self.sparse.shape[0]

    @property
    def n0(self) -> int:
        return self.a0.size

    @property
    def n(self) -> int:
        return self.a1.shape[0]

    def v1(self, z: complex) -> np.ndarray:
        """``sum_q b_q b_q* / (z - mu_q)`` from the stored factors."""
        b = self.b01
        return (b.conj().T / (z - self.a0)) @ b

    def schur_m1(self, z: complex) -> np.ndarray:
        """``A1 - z - B10 (A0 - z)^-1 B01``."""
        return self.a1 - z * np.eye(self.n) + self.v1(z)


def _branch_nodes(br: ACBranch, N: int, order: int = PANEL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Real nodes and weights on one branch; infinite ends are mapped to a finite variable."""
    panels = max(1, N // order)
    x, wx = _gl(order)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    t = ((hi - lo) / 2 * x + (hi + lo) / 2).ravel()
    wt = ((hi - lo) / 2 * wx).ravel()
    a, b = br.a, br.b
    terms = br.density.terms
    widths = [getattr(p, "w", getattr(p, "s", 1.0)) for p, _ in terms]
    centers = [getattr(p, "x0", 0.0) for p, _ in terms]
    sc = max(widths, default=1.0)
    if math.isfinite(a) and math.isfinite(b):
        return (b - a) / 2 * t + (b + a) / 2, (b - a) / 2 * wt
    if not math.isfinite(a) and not math.isfinite(b):
        # mu = x_c + sc tan(pi t / 2): a Lorentzian weight becomes uniform
        xc = centers[0] if centers else 0.0
        th = np.pi * t / 2
        return xc + sc * np.tan(th), sc * (np.pi / 2) / np.cos(th) ** 2 * wt
    # half line: mu = a + sc (1+t)/(1-t)  or  b - sc (1+t)/(1-t)
    u = (1 + t) / (1 - t)
    du = 2 / (1 - t) ** 2 * wt * sc
    if math.isfinite(a):
        return a + sc * u, du
    return b - sc * u, du


def _factor(mats: np.ndarray, floor: float) -> tuple[np.ndarray, np.ndarray]:
    """Columns ``b`` with ``mats[q] = sum b b*`` over the kept eigenpairs (above ``floor``).

    Returns the columns and the index of the node each column belongs to.
    """
    w, v = np.linalg.eigh(0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2))))
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.size and w.min() < -1e-10 * scale:
        raise AssertionError(f"node matrix is indefinite (min eigenvalue {w.min():.3e})")
    q, j = np.nonzero(w > floor)
    cols = v[q, :, j] * np.sqrt(w[q, j])[:, None]
    return cols, q


def _assemble(s: SpectralScenario, N: int) -> DiscretizedH:
    n = s.n
    mats, mus, tags = [np.zeros((0, n, n), complex)], [np.zeros(0)], [np.zeros(0, int)]
    if s.atoms:
        mats.append(np.array([a.weight for a in s.atoms], dtype=complex))
        mus.append(np.array([a.mu for a in s.atoms], float))
        tags.append(np.full(len(s.atoms), -1))
    for k, br in enumerate(s.branches):
        if not br.density.terms:
            continue
        mu, w = _branch_nodes(br, N)
        mats.append(density_values(br, mu.astype(complex), n) * w[:, None, None])
        mus.append(mu)
        tags.append(np.full(mu.size, k))
    mats, mus, tags = np.concatenate(mats), np.concatenate(mus), np.concatenate(tags)
    floor = KEEP * max(float(np.abs(mats).max(initial=0.0)), 1e-300)
    cols, q = _factor(mats, floor)
    a0 = mus[q]
    b01 = cols.conj()
    b10 = cols.T
    H = sp.bmat([[sp.diags(a0.astype(complex)), sp.csr_matrix(b01)], [sp.csr_matrix(b10), sp.csr_matrix(s.a1)]])
    return DiscretizedH(H.tocsr(), a0, b01, s.a1.astype(complex), a0.copy(), tags[q], N)


def discretize_full(s: SpectralScenario, N: int = 256) -> DiscretizedH:
    """Discretize the full operator with ``N`` nodes per branch.

    ``error_estimate`` is the largest change of ``V1`` at a few test points
    when ``N`` is halved; it bounds the error of the finer level whenever
    the convergence is at least linear.
    """
    if N < 16:
        raise ValueError("N must be at least 16")
    ensure_valid(s)
    h = _assemble(s, N)
    coarse = _assemble(s, N // 2)
    est = max(spectral_norm(h.v1(z) - coarse.v1(z)) for z in TEST_POINTS)
    h.error_estimate = max(est, 1e-15)
    return h


def full_spectrum(h: DiscretizedH) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of the Hermitian matrix."""
    if h.size > DENSE_LIMIT:
        raise MemoryError(f"dense eigendecomposition of size {h.size} refused; use spectrum_window")
    return sla.eigh(h.matrix)


def spectrum_window(h: DiscretizedH, lo: float, hi: float, k: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs with eigenvalues in ``(lo, hi)`` by shift-invert around the midpoint.

    The number of requested pairs grows until at least one returned
    eigenvalue falls outside the window, so none inside is missed.
    """
    if h.size <= DENSE_LIMIT:
        w, v = full_spectrum(h)
        keep = (w > lo) & (w < hi)
        return w[keep], v[:, keep]
    mid = 0.5 * (lo + hi)
    while True:
        k = min(k, h.size - 2)
        w, v = spla.eigsh(h.sparse, k=k, sigma=mid, which="LM", tol=1e-14)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        keep = (w > lo) & (w < hi)
        if not keep.all() or k >= h.size - 2:
            return w[keep], v[:, keep]
        k *= 2


def lift_eigenvector(h: DiscretizedH, lam: float, psi1: np.ndarray, safe: float = 1e-8) -> tuple[np.ndarray, float]:
    """``psi0 = -R0(lambda) B01 psi1`` and the relative residual of ``(psi0, psi1)``."""
    psi1 = np.asarray(psi1, dtype=complex)
    v = h.b01 @ psi1
    gap = h.a0 - lam
    near = np.abs(gap) <= safe
    if np.any(near):
        tiny = np.abs(v[near]) <= 1e-13 * max(1.0, np.linalg.norm(v)) * np.linalg.norm(psi1)
        if not np.all(tiny):
            raise LiftError(f"lambda={lam} sits on a node that psi1 does not annihilate")
    psi0 = np.zeros_like(v)
    ok = ~near
    psi0[ok] = -v[ok] / gap[ok]
    full = np.concatenate([psi0, psi1])
    res = np.linalg.norm(h.sparse @ full - lam * full) / np.linalg.norm(full)
    return psi0, float(res)


def gap_eigenvalues(h: DiscretizedH, lo: float, hi: float) -> np.ndarray:
    return spectrum_window(h, lo, hi)[0]


# ---------------------------------------------------------------------------
# decoupling


def decouple(s: SpectralScenario, w: np.ndarray, name: str | None = None) -> SpectralScenario:
    """Project every coupling matrix onto the complement of the ``A1`` eigenvector ``w``.

    Afterwards ``K_s w = 0`` and ``G_j w = 0``, so ``<A1 w, w>`` is an exact
    eigenvalue of every ``H1^(l)``; it is embedded when it lies inside a branch.
    """
    w = np.asarray(w, dtype=complex).ravel()
    w = w / np.linalg.norm(w)
    lam = np.vdot(w, s.a1 @ w)
    if np.linalg.norm(s.a1 @ w - lam * w) > 1e-12 * max(1.0, spectral_norm(s.a1)):
        raise ValueError("w is not an eigenvector of a1")
    P = np.eye(s.n) - np.outer(w, w.conj())

    def proj(g):
        out = P @ g @ P
        # exact zeros where the projector is a coordinate projector
        out[np.abs(out) < 1e-300] = 0.0
        return 0.5 * (out + out.conj().T)

    atoms = tuple(Atom(a.mu, proj(a.weight)) for a in s.atoms)
    branches = tuple(
        ACBranch(b.interval, AnalyticDensity(tuple((p, proj(g)) for p, g in b.density.terms))) for b in s.branches
    )
    return replace(s, atoms=atoms, branches=branches, name=name or (s.name + "-decoupled"))
