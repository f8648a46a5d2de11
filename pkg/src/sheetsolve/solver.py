"""Certified Picard iteration for ``X = V1(A1 + X, Gamma)``."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .contour import Contour, contour_for_sheet, contour_variation_report, depth_contour, separation_d0, sheet_str
from .model import SpectralScenario, ensure_valid, spectral_norm
from .transfer import SpectralCollisionError, apply_V1_operator

RATIO_SLACK = 0.05


class SolvabilityError(ValueError):
    """The contraction condition ``V0 < d0^2 / 4`` fails for the contour."""


class ConvergenceError(RuntimeError):
    """Picard iteration did not reach the tolerance, or broke its certificate."""


@dataclass(frozen=True)
class SolvabilityCertificate:
    v0: float
    d0: float
    condition_ok: bool
    r_min: float
    r_max: float
    rate: float
    v0_quad_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "v0": self.v0,
            "v0_quad_error": self.v0_quad_error,
            "d0": self.d0,
            "condition_ok": self.condition_ok,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "contraction_rate": self.rate,
        }


def certificate_from(v0: float, d0: float, v0_quad_error: float = 0.0) -> SolvabilityCertificate:
    """Closed-form radii of the ball on which ``X -> V1(A1 + X)`` contracts."""
    ok = v0 < d0 * d0 / 4
    if not ok:
        return SolvabilityCertificate(v0, d0, False, math.nan, math.nan, math.nan, v0_quad_error)
    r_min = d0 / 2 - math.sqrt(d0 * d0 / 4 - v0)
    r_max = d0 - math.sqrt(v0)
    rate = v0 / (d0 - r_min) ** 2
    return SolvabilityCertificate(v0, d0, True, r_min, r_max, rate, v0_quad_error)


def solvability_report(s: SpectralScenario, c: Contour) -> SolvabilityCertificate:
    rep = contour_variation_report(s, c)
    return certificate_from(rep.value, separation_d0(s, c), rep.quad_error)


@dataclass(eq=False)
class SheetSolution:
    sheet: tuple[int, ...]
    x: np.ndarray
    h1: np.ndarray
    certificate: SolvabilityCertificate
    iterations: int
    final_residual: float
    quadrature_error: float
    steps: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    max_ratio: float = 0.0
    ball_ok: bool = True
    ratio_ok: bool = True
    uncertified: bool = False
    tol: float = 1e-12
    mode: str = "picard"
    contour: Contour | None = None
    omega: np.ndarray | None = None

    @property
    def label(self) -> str:
        return sheet_str(self.sheet)


def _ratio_floor(scale: float) -> float:
    # steps below this are roundoff; their ratios carry no information
    return 1e3 * np.finfo(float).eps * max(1.0, scale)


def _anderson(F, x0: np.ndarray, depth: int, tol: float, max_iter: int):
    """Anderson mixing on the residual ``F(x) - x``; returns the last iterate."""
    shape = x0.shape
    x = x0.ravel()
    hist_g, hist_f = [], []
    g = F(x.reshape(shape)).ravel()
    f = g - x
    for k in range(max_iter):
        if np.linalg.norm(f) <= tol * max(1.0, np.linalg.norm(g)):
            return g.reshape(shape), k + 1
        hist_g.append(g)
        hist_f.append(f)
        if len(hist_f) > depth + 1:
            hist_g.pop(0)
            hist_f.pop(0)
        if len(hist_f) > 1:
            dF = np.stack([hist_f[i + 1] - hist_f[i] for i in range(len(hist_f) - 1)], axis=1)
            dG = np.stack([hist_g[i + 1] - hist_g[i] for i in range(len(hist_g) - 1)], axis=1)
            gamma, *_ = np.linalg.lstsq(dF, f, rcond=None)
            x = g - dG @ gamma
        else:
            x = g
        g = F(x.reshape(shape)).ravel()
        f = g - x
    return g.reshape(shape), max_iter


def solve_basic_equation(
    s: SpectralScenario,
    c: Contour,
    tol: float = 1e-12,
    max_iter: int = 200,
    *,
    allow_uncertified: bool = False,
    x0: np.ndarray | None = None,
    accelerate: str | None = None,
    check_bound: bool = True,
    backend: str | None = None,
) -> SheetSolution:
    """Solve ``X = V1(A1 + X, Gamma_l)`` by Picard iteration from ``X0 = 0``.

    The observed step ratios are compared against the certified rate
    ``q = V0 / (d0 - r_min)^2`` and the limit against the ball radius
    ``r_min``.  A warm start ``x0`` inside the ``r_max`` ball skips the
    ratio test, since ``q`` is the rate on the ``r_min`` ball only.  With ``accelerate="anderson"`` an Anderson pre-solve is
    polished by plain Picard steps so the certified stopping rule still
    decides.
    """
    ensure_valid(s)
    cert = solvability_report(s, c)
    if not cert.condition_ok and not allow_uncertified:
        raise SolvabilityError(
            f"V0(B,Gamma)={cert.v0:.6g} is not below d0^2/4={cert.d0 ** 2 / 4:.6g}"
        )
    a1 = s.a1
    n = s.n
    x = np.zeros((n, n), complex) if x0 is None else np.array(x0, dtype=complex)

    def F(xk):
        return apply_V1_operator(s, c, a1 + xk, with_error=False, with_bound=check_bound, backend=backend).value

    mode = "picard" if x0 is None else "warm-start"
    pre_iters = 0
    if accelerate == "anderson":
        x, pre_iters = _anderson(F, x, depth=4, tol=tol, max_iter=max_iter)
        mode = "anderson+picard"
    elif accelerate is not None:
        raise ValueError(f"unknown acceleration {accelerate!r}")

    steps: list[float] = []
    ratios: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        try:
            x_new = F(x)
        except SpectralCollisionError as exc:
            raise ConvergenceError(f"spectral collision at iteration {it}: {exc}") from exc
        step = spectral_norm(x_new - x)
        if steps and steps[-1] > _ratio_floor(spectral_norm(x_new)):
            ratios.append(step / steps[-1])
        steps.append(step)
        x = x_new
        if step <= tol * max(1.0, spectral_norm(x)):
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"no convergence in {max_iter} iterations (last step {steps[-1]:.3e})")

    final = apply_V1_operator(s, c, a1 + x, with_error=True, with_bound=check_bound, backend=backend)
    residual = spectral_norm(x - final.value)
    max_ratio = max(ratios, default=0.0)
    ratio_ok = bool(not cert.condition_ok or mode != "picard" or max_ratio <= cert.rate + RATIO_SLACK)
    ball_ok = bool(not cert.condition_ok or spectral_norm(x) <= cert.r_min + 10 * tol)
    if cert.condition_ok and not (ratio_ok and ball_ok):
        raise ConvergenceError(
            f"certificate broken: max ratio {max_ratio:.4g} (q={cert.rate:.4g}), "
            f"||X||={spectral_norm(x):.6g} (r_min={cert.r_min:.6g})"
        )
    return SheetSolution(
        sheet=tuple(c.sheet),
        x=x,
        h1=a1 + x,
        certificate=cert,
        iterations=it + pre_iters,
        final_residual=residual,
        quadrature_error=final.quadrature_error,
        steps=steps,
        ratios=ratios,
        max_ratio=max_ratio,
        ball_ok=ball_ok,
        ratio_ok=ratio_ok,
        uncertified=not cert.condition_ok,
        tol=tol,
        mode=mode,
        contour=c,
    )


def all_sheets(m: int) -> list[tuple[int, ...]]:
    return [tuple(p) for p in itertools.product((-1, 1), repeat=m)]


def solve_all_sheets(
    s: SpectralScenario, c: Contour, workers: int | None = None, **kw
) -> dict[tuple[int, ...], SheetSolution]:
    """Solve on all ``2^m`` sheets, reflecting components of ``c`` as needed."""
    sheets = all_sheets(s.m)
    contours = [contour_for_sheet(c, sh) for sh in sheets]
    workers = workers or min(4, len(sheets))
    if workers <= 1:
        sols = [solve_basic_equation(s, cc, **kw) for cc in contours]
    else:
        with ThreadPoolExecutor(workers) as pool:
            sols = list(pool.map(lambda cc: solve_basic_equation(s, cc, **kw), contours))
    return dict(zip(sheets, sols))


def depth_family(
    s: SpectralScenario, sheet, depths: Iterable[float], rule=None
) -> list[Contour]:
    """Contours of the standard shape at each depth; inadmissible geometries are skipped."""
    from .contour import ContourError

    out = []
    for d in depths:
        try:
            out.append(depth_contour(s, sheet, d, rule))
        except ContourError:
            continue
    return out


def estimate_r0(s: SpectralScenario, family: Sequence[Contour]) -> tuple[float, Contour]:
    """Smallest ``r_min`` over the admissible members: an upper bound on ``r0(B)``."""
    best = None
    for c in family:
        cert = solvability_report(s, c)
        if cert.condition_ok and (best is None or cert.r_min < best[0]):
            best = (cert.r_min, c)
    if best is None:
        raise SolvabilityError("no admissible contour in the family")
    return best
