"""Factorization ``M1(z, Gamma) = W1(z, Gamma)(H1 - z)``, the form ``Omega`` and contour moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .contour import Circle, Contour, integration_set_distance
from .model import SpectralScenario, a1_spectrum, spectral_norm
from .solver import SheetSolution
from .transfer import SpectralCollisionError, check_operator_separation, discrete_measure, eval_M1_sheet

COND_CAP = 1e12


class CircleError(ValueError):
    """A quadrature circle is inadmissible (overlap, leaves the vicinity, hits a singularity)."""


@dataclass(frozen=True)
class FactorizationReport:
    z: complex
    w1: np.ndarray
    residual: float
    quadrature_error: float
    w1_inverse_norm: float | None
    bound: float | None

    @property
    def bound_ok(self) -> bool:
        if self.w1_inverse_norm is None:
            return True
        return self.w1_inverse_norm <= self.bound * (1 + 1e-12)


def _w1_sum(h1: np.ndarray, mu: np.ndarray, wk: np.ndarray, z: complex, backend=None) -> np.ndarray:
    # int K(dmu) (mu - z)^-1 (H1 - mu)^-1 ; scalar factor folded into the weights
    scaled = wk / (mu - z)[:, None, None]
    return np.eye(h1.shape[0]) - _backend.resolvent_sum(h1, mu, scaled, backend)


def eval_W1(s: SpectralScenario, c: Contour, sol: SheetSolution, z: complex, backend=None) -> FactorizationReport:
    """Evaluate ``W1(z, Gamma_l)`` and the factorization residual at ``z``."""
    z = complex(z)
    if integration_set_distance(c, z) <= 1e-12:
        raise SpectralCollisionError(f"z={z} lies on the integration set")
    meas = discrete_measure(s, c)
    w1 = _w1_sum(sol.h1, meas.mu, meas.wk, z, backend)
    w1c = _w1_sum(sol.h1, meas.mu_coarse, meas.wk_coarse, z, backend)
    m1 = eval_M1_sheet(s, c, z)
    shift = sol.h1 - z * np.eye(s.n)
    residual = spectral_norm(m1.value - w1 @ shift)
    err = m1.quadrature_error + spectral_norm(w1 - w1c) * spectral_norm(shift) + sol.final_residual
    inv_norm = bound = None
    d0, v0 = sol.certificate.d0, sol.certificate.v0
    dist = min(abs(z - e.value) for e in a1_spectrum(s))
    if dist <= d0 / 2 and sol.certificate.condition_ok:
        bound = 1.0 / (1.0 - v0 / (d0 * d0 / 4))
        inv_norm = 1.0 / np.linalg.svd(w1, compute_uv=False)[-1]
    return FactorizationReport(z, w1, residual, err, inv_norm, bound)


@dataclass(frozen=True)
class OmegaResult:
    value: np.ndarray
    quadrature_error: float
    norm: float
    bound: float

    @property
    def bound_ok(self) -> bool:
        # with no coupling both sides vanish
        return (self.norm < self.bound or self.norm == 0.0) and self.norm < 1.0


def compute_omega(
    s: SpectralScenario, c: Contour, sol_l: SheetSolution, sol_minus_l: SheetSolution, backend=None
) -> OmegaResult:
    """``Omega^(l) = int (H1^(-l)* - mu)^-1 K_B(dmu) (H1^(l) - mu)^-1`` over ``Gamma_l``."""
    left = sol_minus_l.h1.conj().T
    right = sol_l.h1
    check_operator_separation(c, left)
    check_operator_separation(c, right)
    meas = discrete_measure(s, c)
    try:
        val = _backend.sandwich_sum(left, right, meas.mu, meas.wk, backend)
        coarse = _backend.sandwich_sum(left, right, meas.mu_coarse, meas.wk_coarse, backend)
    except np.linalg.LinAlgError as exc:
        raise SpectralCollisionError(str(exc)) from exc
    err = spectral_norm(val - coarse)
    if meas.tail:
        gap = meas.min_cut - max(spectral_norm(left), spectral_norm(right))
        err += meas.tail / gap**2 if gap > 0 else math.inf
    cert = sol_l.certificate
    bound = cert.v0 / (cert.d0 / 2) ** 2
    res = OmegaResult(val, err, spectral_norm(val), bound)
    sol_l.omega = val
    return res


def adjoint_residual(
    s: SpectralScenario,
    c_l: Contour,
    c_minus_l: Contour,
    sol_l: SheetSolution,
    sol_minus_l: SheetSolution,
    z: complex,
) -> float:
    """``||W1(z,Gamma_l)(H1^(l)-z) - (H1^(-l)*-z)[W1(conj z,Gamma_-l)]*||``."""
    n = s.n
    a = eval_W1(s, c_l, sol_l, z).w1 @ (sol_l.h1 - z * np.eye(n))
    b = eval_W1(s, c_minus_l, sol_minus_l, np.conj(z)).w1
    rhs = (sol_minus_l.h1.conj().T - z * np.eye(n)) @ b.conj().T
    return spectral_norm(a - rhs)


# ---------------------------------------------------------------------------
# circles around the spectrum of H1 and contour moments


@dataclass(frozen=True)
class GammaCircle:
    circle: Circle
    a1_values: tuple[float, ...]
    inside_vicinity: bool


def gamma_circles(s: SpectralScenario, sol: SheetSolution) -> list[GammaCircle]:
    """Circles around the clusters of ``sigma(H1)``, as large as the vicinity allows.

    A1 eigenvalues closer than ``2 r_min`` cannot be separated and share one
    circle; such a circle may leave ``O_{d0/2}(A1)``, which is flagged.
    """
    d0, r_min = sol.certificate.d0, sol.certificate.r_min
    lam = [e.value for e in a1_spectrum(s)]
    groups: list[list[float]] = [[lam[0]]]
    for x in lam[1:]:
        if x - groups[-1][-1] <= 2 * r_min * 1.05:
            groups[-1].append(x)
        else:
            groups.append([x])
    centers = [(g[0] + g[-1]) / 2 for g in groups]
    halfspan = [(g[-1] - g[0]) / 2 for g in groups]
    eig = np.linalg.eigvals(sol.h1)
    owner = [int(np.argmin([abs(e - ce) - hs for ce, hs in zip(centers, halfspan)])) for e in eig]
    out = []
    for i, (g, ce, hs) in enumerate(zip(groups, centers, halfspan)):
        mine = [abs(e - ce) for e, o in zip(eig, owner) if o == i]
        outer = d0 / 2
        for j, (cj, hj) in enumerate(zip(centers, halfspan)):
            if j != i:
                # half the edge-to-edge gap keeps neighbouring circles disjoint
                outer = min(outer, (abs(cj - ce) - hj - hs) / 2)
        r_in = max(max(mine, default=0.0) - hs, 1e-3 * outer)
        rho = math.sqrt(r_in * outer) if outer > r_in else r_in * 1.01
        circ = Circle(complex(ce), hs + rho)
        out.append(GammaCircle(circ, tuple(g), hs == 0.0 and rho < d0 / 2))
    return out


def _inverse_on_circle(s: SpectralScenario, c: Contour, circ: Circle, M: int):
    from .transfer import M1_many

    z, dz = circ.nodes(M)
    d = min(integration_set_distance(c, complex(zz)) for zz in z[:: max(1, M // 64)])
    if d <= 1e-12:
        raise CircleError(f"circle at {circ.center} touches the integration set")
    m1 = M1_many(s, c, z)
    cond = np.linalg.cond(m1)
    if not np.all(np.isfinite(cond)) or cond.max() > COND_CAP:
        raise CircleError(f"M1 is numerically singular on the circle at {circ.center} (cond {cond.max():.2e})")
    return z, dz, np.linalg.inv(m1), float(cond.max())


def moment_functionals(
    s: SpectralScenario,
    c: Contour,
    sol: SheetSolution,
    circles: list[GammaCircle] | None = None,
    M: int = 256,
    strict: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """``P0 = -(2 pi i)^-1 oint M1^-1 dz`` and ``P1 = -(2 pi i)^-1 oint z M1^-1 dz``."""
    circles = gamma_circles(s, sol) if circles is None else circles
    if strict and not all(g.inside_vicinity for g in circles):
        raise CircleError("a quadrature circle leaves the d0/2 vicinity of sigma(A1)")
    for i, gi in enumerate(circles):
        for gj in circles[i + 1:]:
            if abs(gi.circle.center - gj.circle.center) <= gi.circle.radius + gj.circle.radius:
                raise CircleError("quadrature circles overlap")
    n = s.n
    p0 = np.zeros((n, n), complex)
    p1 = np.zeros((n, n), complex)
    for g in circles:
        z, dz, inv, _ = _inverse_on_circle(s, c, g.circle, M)
        p0 += np.tensordot(dz, inv, axes=1)
        p1 += np.tensordot(dz * z, inv, axes=1)
    scale = -1.0 / (2j * np.pi)
    return scale * p0, scale * p1
