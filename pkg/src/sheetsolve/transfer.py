"""Continued transfer function ``M1(z, Gamma_l)`` and the operator map ``Y -> V1(Y, Gamma)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .contour import Contour, QuadratureRule, integration_set_distance, node_density, physical_contour, quadrature_nodes
from .model import SpectralScenario, spectral_norm

ON_SET_TOL = 1e-12
OPERATOR_SEPARATION = 1e-10


class SpectralCollisionError(ValueError):
    """A point or the spectrum of an operator touches the integration set."""


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """``K_B`` restricted to ``sigma'(A0) u Gamma_l`` as weighted point masses.

    Atoms come first with their exact weights, followed by the quadrature
    nodes with weights ``w_q K'_B(mu_q)``.  ``*_coarse`` hold the same for the
    coarse companion rule.
    """

    mu: np.ndarray
    wk: np.ndarray
    mu_coarse: np.ndarray
    wk_coarse: np.ndarray
    tail: float
    min_cut: float
    variation: float
    n: int


def discrete_measure(s: SpectralScenario, c: Contour) -> DiscreteMeasure:
    cache = c.__dict__.setdefault("_measures", {})
    key = id(s)
    if key in cache and cache[key][0] is s:
        return cache[key][1]
    from .contour import contour_variation  # local: avoids recomputing nodes at import

    q = quadrature_nodes(c)
    atom_mu = np.array([a.mu for a in s.atoms], dtype=complex)
    atom_w = np.array([a.weight for a in s.atoms], dtype=complex).reshape(len(s.atoms), s.n, s.n)
    kf = node_density(s, q.mu, q.branch) * q.w[:, None, None]
    kc = node_density(s, q.mu_coarse, q.branch_coarse) * q.w_coarse[:, None, None]
    cuts = [abs(x) for p in c.paths for x in (p.left_cut, p.right_cut) if x is not None]
    meas = DiscreteMeasure(
        np.concatenate([atom_mu, q.mu]),
        np.concatenate([atom_w, kf]),
        np.concatenate([atom_mu, q.mu_coarse]),
        np.concatenate([atom_w, kc]),
        q.tail,
        min(cuts) if cuts else math.inf,
        contour_variation(s, c),
        s.n,
    )
    cache[key] = (s, meas)
    return meas


def cauchy_sum(mu: np.ndarray, wk: np.ndarray, z) -> np.ndarray:
    """``sum_j wk_j / (z - mu_j)`` for a scalar or 1-d array of ``z``."""
    z = np.asarray(z, dtype=complex)
    coef = 1.0 / (z[..., None] - mu)
    return np.tensordot(coef, wk, axes=([-1], [0]))


def _tail_point_error(meas: DiscreteMeasure, z: complex) -> float:
    if meas.tail == 0.0:
        return 0.0
    gap = meas.min_cut - abs(z)
    return meas.tail / gap if gap > 0 else math.inf


@dataclass(frozen=True)
class TransferEvaluation:
    value: np.ndarray
    quadrature_error: float
    sheet: str


def _check_point(c: Contour, z: complex) -> None:
    d = integration_set_distance(c, z)
    if d <= ON_SET_TOL:
        raise SpectralCollisionError(f"z={z} lies on the integration set (distance {d:.2e})")


def eval_V1_point(s: SpectralScenario, c: Contour, z: complex) -> TransferEvaluation:
    """``V1(z, Gamma_l) = int K_B(dmu) / (z - mu)``; the physical contour gives ``V1(z)``."""
    z = complex(z)
    _check_point(c, z)
    meas = discrete_measure(s, c)
    fine = cauchy_sum(meas.mu, meas.wk, z)
    coarse = cauchy_sum(meas.mu_coarse, meas.wk_coarse, z)
    err = spectral_norm(fine - coarse) + _tail_point_error(meas, z)
    return TransferEvaluation(fine, err, c.label)


def eval_M1_sheet(s: SpectralScenario, c: Contour, z: complex) -> TransferEvaluation:
    """``M1(z, Gamma_l) = A1 - z + V1(z, Gamma_l)``."""
    v = eval_V1_point(s, c, z)
    return TransferEvaluation(s.a1 - complex(z) * np.eye(s.n) + v.value, v.quadrature_error, v.sheet)


def eval_M1_physical(s: SpectralScenario, z: complex, rule: QuadratureRule | None = None) -> TransferEvaluation:
    return eval_M1_sheet(s, physical_contour(s, rule), z)


def M1_many(s: SpectralScenario, c: Contour, zs) -> np.ndarray:
    """``M1(z, Gamma_l)`` on an array of points, shape ``zs.shape + (n, n)``."""
    zs = np.asarray(zs, dtype=complex)
    meas = discrete_measure(s, c)
    eye = np.eye(s.n)
    return s.a1 - zs[..., None, None] * eye + cauchy_sum(meas.mu, meas.wk, zs)


@dataclass(frozen=True)
class BoundReport:
    variation: float
    sup_resolvent: float
    bound: float
    norm: float

    @property
    def holds(self) -> bool:
        return self.norm <= self.bound * (1 + 1e-12) + 1e-300


@dataclass(frozen=True)
class V1Application:
    value: np.ndarray
    quadrature_error: float
    bound: BoundReport | None


def check_operator_separation(c: Contour, Y: np.ndarray, tol: float = OPERATOR_SEPARATION) -> float:
    """Smallest distance from ``sigma(Y)`` to the integration set; raises on contact."""
    eigs = np.linalg.eigvals(Y)
    d = min(integration_set_distance(c, complex(e)) for e in eigs)
    if d <= tol:
        raise SpectralCollisionError(f"spectrum of Y touches the integration set (distance {d:.2e})")
    return d


def sup_resolvent_norm(Y: np.ndarray, mu: np.ndarray) -> float:
    """``max_q ||(Y - mu_q)^-1||`` over the given nodes."""
    if mu.size == 0:
        return 0.0
    n = Y.shape[0]
    A = Y[None] - mu[:, None, None] * np.eye(n)
    smin = np.linalg.svd(A, compute_uv=False)[:, -1]
    return float(1.0 / smin.min())


def apply_V1_operator(
    s: SpectralScenario,
    c: Contour,
    Y: np.ndarray,
    *,
    with_error: bool = True,
    with_bound: bool = True,
    check: bool = True,
    backend: str | None = None,
) -> V1Application:
    """``V1(Y, Gamma) = int K_B(dmu) (Y - mu)^-1`` by one dense solve per node.

    With ``with_bound`` the estimate ``||V1(Y)|| <= V0(B, Gamma) sup ||(Y - mu)^-1||``
    is evaluated over the nodes and asserted.
    """
    Y = np.asarray(Y, dtype=complex)
    if check:
        check_operator_separation(c, Y)
    meas = discrete_measure(s, c)
    try:
        val = _backend.resolvent_sum(Y, meas.mu, meas.wk, backend)
    except np.linalg.LinAlgError as exc:
        raise SpectralCollisionError(str(exc)) from exc
    err = 0.0
    if with_error:
        coarse = _backend.resolvent_sum(Y, meas.mu_coarse, meas.wk_coarse, backend)
        err = spectral_norm(val - coarse)
        if meas.tail:
            gap = meas.min_cut - spectral_norm(Y)
            err += meas.tail / gap if gap > 0 else math.inf
    rep = None
    if with_bound:
        sup = sup_resolvent_norm(Y, meas.mu)
        rep = BoundReport(meas.variation, sup, meas.variation * sup, spectral_norm(val))
        if not rep.holds:
            raise AssertionError(
                f"norm bound violated: ||V1(Y)||={rep.norm:.6e} > {rep.bound:.6e}"
            )
    return V1Application(val, err, rep)
