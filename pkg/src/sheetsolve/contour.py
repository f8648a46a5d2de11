"""Integration sets ``sigma'(A0) u Gamma_l``: polyline paths, quadrature, geometry.

Every branch is deformed into a polyline anchored at its finite end points.
An infinite end becomes a horizontal ray at the height of the outermost
vertex; the ray is truncated at an abscissa chosen so that the analytic
tail bound of the density stays below the rule's target.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .model import SpectralScenario, density_values, discrete_variation, spectral_norm

MINUS_SIGNS = ("-", "−")


class ContourError(ValueError):
    """A path violates one of the structural requirements of its branch."""


class BoundaryError(ValueError):
    """A point is too close to the boundary of the pocket region."""


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule.

    ``order`` nodes per panel, ``panels`` panels per straight segment.  Rays
    get uniform panels of length ``ray_panel`` out to ``ray_uniform`` from
    their start, then panels doubling in length up to the truncation.
    """

    order: int = 16
    panels: int = 8
    ray_panel: float = 0.25
    ray_uniform: float = 4.0
    tail_target: float = 1e-10
    pole_margin: float = 1e-6

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "panels": self.panels,
            "ray_panel": self.ray_panel,
            "ray_uniform": self.ray_uniform,
            "tail_target": self.tail_target,
            "pole_margin": self.pole_margin,
        }


def parse_sheet(text: str | Sequence[int]) -> tuple[int, ...]:
    """``"-+"`` -> ``(-1, 1)``.  Tuples of signs pass through."""
    if not isinstance(text, str):
        out = tuple(int(x) for x in text)
    else:
        out = []
        for ch in text.strip():
            if ch == "+":
                out.append(1)
            elif ch in MINUS_SIGNS:
                out.append(-1)
            else:
                raise ValueError(f"bad sheet character {ch!r}; use '+' or '-'")
        out = tuple(out)
    if any(x not in (-1, 1) for x in out):
        raise ValueError(f"sheet entries must be +1 or -1, got {out}")
    return out


def sheet_str(sheet: Sequence[int] | None) -> str:
    if sheet is None:
        return "physical"
    return "".join("+" if x > 0 else ("-" if x < 0 else "0") for x in sheet)


@dataclass(frozen=True)
class BranchPath:
    """Polyline through ``vertices`` plus optional horizontal rays.

    ``left_cut`` / ``right_cut`` are the truncation abscissae of the rays
    used by the quadrature; they are filled in by :func:`build_contour`.
    """

    vertices: tuple[complex, ...]
    left_ray: bool = False
    right_ray: bool = False
    left_cut: float | None = None
    right_cut: float | None = None
    left_tail: float = 0.0
    right_tail: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(complex(v) for v in self.vertices))

    def pieces(self) -> list[tuple[complex, complex]]:
        """Straight segments between consecutive vertices (rays excluded)."""
        v = self.vertices
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]

    def conjugate(self) -> "BranchPath":
        return replace(self, vertices=tuple(v.conjugate() for v in self.vertices))


@dataclass(frozen=True, eq=False)
class Contour:
    """``Gamma_l``: one path per branch, the sheet signs and the quadrature rule.

    ``sheet`` entries are ``+1``/``-1``; the physical sheet is all zeros and
    its paths are the real intervals themselves.
    """

    sheet: tuple[int, ...]
    paths: tuple[BranchPath, ...]
    rule: QuadratureRule = field(default_factory=QuadratureRule)
    pole_margins: tuple[float, ...] = ()
    atoms: tuple[float, ...] = ()

    @property
    def physical(self) -> bool:
        return all(x == 0 for x in self.sheet)

    @property
    def label(self) -> str:
        return "physical" if self.physical else sheet_str(self.sheet)


# ---------------------------------------------------------------------------
# geometry helpers


def _point_segment_distance(z: complex, a: complex, b: complex) -> float:
    d = b - a
    L2 = d.real * d.real + d.imag * d.imag
    if L2 == 0.0:
        return abs(z - a)
    t = ((z - a) * d.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return abs(z - (a + t * d))


def _point_ray_distance(z: complex, start: complex, direction: float) -> float:
    """Distance to the horizontal ray ``start + t*direction``, ``t >= 0``."""
    dx = (z.real - start.real) * direction
    dy = z.imag - start.imag
    if dx <= 0:
        return math.hypot(dx, dy)
    return abs(dy)


def path_distance(path: BranchPath, z: complex) -> float:
    """Exact distance from ``z`` to the (untruncated) path."""
    best = math.inf
    v = path.vertices
    if len(v) == 1:
        best = abs(z - v[0])
    for a, b in path.pieces():
        best = min(best, _point_segment_distance(z, a, b))
    if path.left_ray:
        best = min(best, _point_ray_distance(z, v[0], -1.0))
    if path.right_ray:
        best = min(best, _point_ray_distance(z, v[-1], 1.0))
    return best


def integration_set_distance(c: Contour, z: complex) -> float:
    """Distance from ``z`` to ``sigma'(A0) u Gamma_l`` (atoms plus all paths)."""
    best = min((abs(z - mu) for mu in c.atoms), default=math.inf)
    for p in c.paths:
        best = min(best, path_distance(p, z))
    return best


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def cross(o, a, b):
        return (a - o).real * (b - o).imag - (a - o).imag * (b - o).real

    d1, d2 = cross(q1, q2, p1), cross(q1, q2, p2)
    d3, d4 = cross(p1, p2, q1), cross(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


# ---------------------------------------------------------------------------
# construction


def _anchor_close(v: complex, x: float) -> bool:
    return abs(v - x) <= 1e-12 * max(1.0, abs(x))


def _ray_tail(branch, cut_abs: float) -> float:
    total = 0.0
    for prof, g in branch.density.terms:
        total += prof.tail_integral(cut_abs) * spectral_norm(g)
    return total


def _ray_cut(branch, start_re: float, direction: float, rule: QuadratureRule) -> tuple[float, float]:
    """Truncation abscissa for a ray and the resulting tail bound."""
    base = start_re + direction * rule.ray_uniform
    if not branch.density.terms:
        return base, 0.0
    shift = max(abs(p.x0) for p, _ in branch.density.terms)
    amp = sum(p.c * p.w / math.pi * spectral_norm(g) for p, g in branch.density.terms)
    need = shift + amp / rule.tail_target
    cut = direction * max(direction * base, need)
    return cut, _ray_tail(branch, abs(cut))


def build_contour(
    s: SpectralScenario,
    sheet: str | Sequence[int],
    geometry: Sequence[BranchPath | dict | Sequence[complex]],
    rule: QuadratureRule | None = None,
) -> Contour:
    """Validate the per-branch paths and attach ray truncations.

    ``geometry`` holds one entry per branch: a :class:`BranchPath`, a list
    of vertices (rays inferred from infinite ends) or a dict with keys
    ``vertices``, ``left_ray``, ``right_ray``.
    """
    rule = rule or QuadratureRule()
    signs = parse_sheet(sheet) if not (isinstance(sheet, tuple) and 0 in sheet) else tuple(sheet)
    if len(signs) != s.m:
        raise ContourError(f"sheet has {len(signs)} signs but the scenario has {s.m} branches")
    if len(geometry) != s.m:
        raise ContourError(f"expected {s.m} paths, got {len(geometry)}")

    paths = []
    margins = []
    for k, (br, geo, lk) in enumerate(zip(s.branches, geometry, signs)):
        path = _coerce_path(geo, br)
        _check_path(k, br, path, lk, rule)
        margins.extend(_pole_margins(k, br, path, rule))
        updates = {}
        if path.left_ray:
            cut, tail = _ray_cut(br, path.vertices[0].real, -1.0, rule)
            updates.update(left_cut=cut, left_tail=tail)
        if path.right_ray:
            cut, tail = _ray_cut(br, path.vertices[-1].real, 1.0, rule)
            updates.update(right_cut=cut, right_tail=tail)
        paths.append(replace(path, **updates))
    return Contour(tuple(signs), tuple(paths), rule, tuple(margins), tuple(a.mu for a in s.atoms))


def _coerce_path(geo, br) -> BranchPath:
    if isinstance(geo, BranchPath):
        return BranchPath(geo.vertices, geo.left_ray, geo.right_ray)
    if isinstance(geo, dict):
        verts = [complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in geo["vertices"]]
        return BranchPath(
            tuple(verts),
            bool(geo.get("left_ray", math.isinf(br.a))),
            bool(geo.get("right_ray", math.isinf(br.b))),
        )
    return BranchPath(tuple(complex(v) for v in geo), math.isinf(br.a), math.isinf(br.b))


def _check_path(k: int, br, path: BranchPath, lk: int, rule: QuadratureRule) -> None:
    v = path.vertices
    if not v:
        raise ContourError(f"branch {k}: path has no vertices")
    a, b = br.interval
    interior = list(range(len(v)))
    if math.isfinite(a):
        if path.left_ray:
            raise ContourError(f"branch {k}: left ray on a finite left end")
        if not _anchor_close(v[0], a):
            raise ContourError(f"branch {k}: unanchored endpoint, first vertex {v[0]} != {a}")
        interior.remove(0)
    elif not path.left_ray:
        raise ContourError(f"branch {k}: infinite interval without ray geometry on the left")
    if math.isfinite(b):
        if path.right_ray:
            raise ContourError(f"branch {k}: right ray on a finite right end")
        if not _anchor_close(v[-1], b):
            raise ContourError(f"branch {k}: unanchored endpoint, last vertex {v[-1]} != {b}")
        if len(v) - 1 in interior:
            interior.remove(len(v) - 1)
    elif not path.right_ray:
        raise ContourError(f"branch {k}: infinite interval without ray geometry on the right")
    if math.isfinite(a) and math.isfinite(b) and len(v) < 2:
        raise ContourError(f"branch {k}: a finite path needs at least two vertices")

    for i in interior:
        z = v[i]
        if lk == 0:
            if z.imag != 0.0:
                raise ContourError(f"branch {k}: physical path must stay on the real axis")
        elif z.imag == 0.0 or (z.imag > 0) != (lk > 0):
            side = "+" if lk > 0 else "-"
            raise ContourError(f"branch {k}: path on wrong side for l_k={side}1 (vertex {z})")
        if not (a - 1e-12 <= z.real <= b + 1e-12):
            raise ContourError(f"branch {k}: vertex {z} leaves the holomorphy domain over {br.interval}")
    strip = br.density.strip_halfwidth()
    for z in v:
        if abs(z.imag) >= strip - rule.pole_margin:
            raise ContourError(f"branch {k}: vertex {z} outside the pole-free strip |Im| < {strip}")
    segs = path.pieces()
    for i in range(len(segs)):
        for j in range(i + 2, len(segs)):
            if _segments_intersect(*segs[i], *segs[j]):
                raise ContourError(f"branch {k}: path intersects itself")


def _pole_margins(k: int, br, path: BranchPath, rule: QuadratureRule) -> list[float]:
    out = []
    for p in br.density.poles():
        d = path_distance(path, p)
        if d < rule.pole_margin:
            raise ContourError(f"branch {k}: pole collision at {p} (distance {d:.3e})")
        out.append(d)
    return out


def physical_contour(s: SpectralScenario, rule: QuadratureRule | None = None) -> Contour:
    """Degenerate contour whose paths are the real intervals (physical sheet)."""
    geo = []
    for br in s.branches:
        a, b = br.interval
        if math.isfinite(a) and math.isfinite(b):
            geo.append(BranchPath((a, b)))
        elif math.isfinite(a):
            geo.append(BranchPath((a,), right_ray=True))
        elif math.isfinite(b):
            geo.append(BranchPath((b,), left_ray=True))
        else:
            geo.append(BranchPath((0.0,), left_ray=True, right_ray=True))
    return build_contour(s, tuple(0 for _ in s.branches), geo, rule)


def depth_path(br, lk: int, depth: float) -> BranchPath:
    """Standard path of a given depth on side ``lk``: trapezoid, half-trapezoid or line."""
    a, b = br.interval
    h = complex(0.0, lk * depth)
    if math.isfinite(a) and math.isfinite(b):
        slope = min(depth, (b - a) / 4)
        return BranchPath((a, a + slope + h, b - slope + h, b))
    if math.isfinite(a):
        return BranchPath((a, a + depth + h), right_ray=True)
    if math.isfinite(b):
        return BranchPath((b - depth + h, b), left_ray=True)
    return BranchPath((h,), left_ray=True, right_ray=True)


def max_depth(br) -> float:
    """Largest admissible depth for :func:`depth_path` (pole strip, interval width)."""
    strip = br.density.strip_halfwidth()
    return strip if math.isfinite(strip) else 1.0


def depth_contour(
    s: SpectralScenario,
    sheet: str | Sequence[int],
    depths: float | Sequence[float],
    rule: QuadratureRule | None = None,
) -> Contour:
    signs = parse_sheet(sheet)
    if np.isscalar(depths):
        depths = [float(depths)] * s.m
    geo = [depth_path(br, lk, d) for br, lk, d in zip(s.branches, signs, depths)]
    return build_contour(s, signs, geo, rule)


def reflect_contour(c: Contour) -> Contour:
    """Conjugate every path and flip every sheet sign."""
    return flip_branches(c, range(len(c.paths)))


def flip_branches(c: Contour, which: Iterable[int]) -> Contour:
    """Replace the listed components by their mirror images across the real axis."""
    which = set(which)
    paths = tuple(p.conjugate() if k in which else p for k, p in enumerate(c.paths))
    sheet = tuple(-x if k in which else x for k, x in enumerate(c.sheet))
    return Contour(sheet, paths, c.rule, c.pole_margins, c.atoms)


def contour_for_sheet(c: Contour, sheet: str | Sequence[int]) -> Contour:
    """Reflect the components of ``c`` that disagree with ``sheet``."""
    target = parse_sheet(sheet)
    return flip_branches(c, [k for k, (x, y) in enumerate(zip(c.sheet, target)) if x != y])


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class QuadratureNodes:
    """Nodes and complex weights on ``Gamma_l`` for a fine and a coarse rule.

    The coarse rule merges neighbouring panels pairwise on every straight
    piece; the fine/coarse difference is the attached error estimate.
    """

    mu: np.ndarray
    w: np.ndarray
    branch: np.ndarray
    mu_coarse: np.ndarray
    w_coarse: np.ndarray
    branch_coarse: np.ndarray
    tail: float


def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(panels: Sequence[tuple[complex, complex]], x: np.ndarray, wx: np.ndarray):
    if not panels:
        return np.empty(0, complex), np.empty(0, complex)
    a = np.array([p[0] for p in panels])
    b = np.array([p[1] for p in panels])
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    mu = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w = (half[:, None] * wx[None, :]).ravel()
    return mu, w


def _ray_breaks(length: float, rule: QuadratureRule) -> list[float]:
    """Distances from the ray start at which panels break."""
    out = [0.0]
    u = min(rule.ray_uniform, length)
    n_uni = max(1, int(math.ceil(u / rule.ray_panel - 1e-12)))
    out.extend(u * (i + 1) / n_uni for i in range(n_uni))
    d = u
    while d < length * (1 - 1e-15):
        d = min(2.0 * d, length)
        out.append(d)
    return out


def _merge_pairs(panels: list[tuple[complex, complex]]) -> list[tuple[complex, complex]]:
    out = []
    for i in range(0, len(panels) - 1, 2):
        out.append((panels[i][0], panels[i + 1][1]))
    if len(panels) % 2:
        out.append(panels[-1])
    return out


def path_panels(path: BranchPath, rule: QuadratureRule) -> list[list[tuple[complex, complex]]]:
    """Panels of every straight piece of ``path``, ordered left to right."""
    pieces: list[list[tuple[complex, complex]]] = []
    v = path.vertices
    if path.left_ray:
        start = v[0]
        length = start.real - path.left_cut
        br = _ray_breaks(length, rule)[::-1]
        pts = [start - d for d in br]
        pieces.append([(pts[i], pts[i + 1]) for i in range(len(pts) - 1)])
    for a, b in path.pieces():
        p = rule.panels
        pts = [a + (b - a) * (i / p) for i in range(p + 1)]
        pts[-1] = b
        pieces.append([(pts[i], pts[i + 1]) for i in range(p)])
    if path.right_ray:
        start = v[-1]
        length = path.right_cut - start.real
        pts = [start + d for d in _ray_breaks(length, rule)]
        pieces.append([(pts[i], pts[i + 1]) for i in range(len(pts) - 1)])
    return pieces


def quadrature_nodes(c: Contour) -> QuadratureNodes:
    """Nodes traverse each path from its left end to its right end.

    Weights are ``(dmu/dt) * w_GL``, so the weights of a straight segment sum
    to its complex end-point difference.
    """
    cached = getattr(c, "_nodes", None)
    if cached is not None:
        return cached
    x, wx = _gl(c.rule.order)
    fine_mu, fine_w, fine_b = [], [], []
    co_mu, co_w, co_b = [], [], []
    tail = 0.0
    for k, path in enumerate(c.paths):
        tail += path.left_tail + path.right_tail
        for panels in path_panels(path, c.rule):
            mu, w = _panel_nodes(panels, x, wx)
            fine_mu.append(mu), fine_w.append(w), fine_b.append(np.full(mu.size, k))
            mu, w = _panel_nodes(_merge_pairs(panels), x, wx)
            co_mu.append(mu), co_w.append(w), co_b.append(np.full(mu.size, k))

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.empty(0, dtype)

    nodes = QuadratureNodes(
        cat(fine_mu, complex), cat(fine_w, complex), cat(fine_b, int),
        cat(co_mu, complex), cat(co_w, complex), cat(co_b, int), tail,
    )
    object.__setattr__(c, "_nodes", nodes)
    return nodes


def node_density(s: SpectralScenario, mu: np.ndarray, branch: np.ndarray) -> np.ndarray:
    """``K'_B`` at every node, shape ``(N, n, n)``."""
    out = np.zeros((mu.size, s.n, s.n), dtype=complex)
    for k, br in enumerate(s.branches):
        sel = branch == k
        if np.any(sel):
            out[sel] = density_values(br, mu[sel], s.n)
    return out


@dataclass(frozen=True)
class VariationReport:
    value: float
    atoms: float
    path_integral: float
    tail: float
    quad_error: float


def contour_variation_report(s: SpectralScenario, c: Contour) -> VariationReport:
    q = quadrature_nodes(c)
    disc = discrete_variation(s)

    def integral(mu, w, br):
        if mu.size == 0:
            return 0.0
        k = node_density(s, mu, br)
        norms = np.linalg.norm(k, 2, axis=(1, 2))
        return float(np.sum(np.abs(w) * norms))

    fine = integral(q.mu, q.w, q.branch)
    coarse = integral(q.mu_coarse, q.w_coarse, q.branch_coarse)
    if not math.isfinite(q.tail):
        raise ContourError("divergent tail: density does not decay along a ray")
    return VariationReport(disc + fine + q.tail, disc, fine, q.tail, abs(fine - coarse))


def contour_variation(s: SpectralScenario, c: Contour) -> float:
    """Modified variation ``V0(B, Gamma_l)``: atoms + path integral + tail bound."""
    return contour_variation_report(s, c).value


def separation_d0(s: SpectralScenario, c: Contour) -> float:
    """``d0 = dist(sigma(A1), sigma'(A0) u Gamma)``; 0 when an eigenvalue is on the set."""
    eigs = np.linalg.eigvalsh(0.5 * (s.a1 + s.a1.conj().T))
    return float(min(integration_set_distance(c, complex(x)) for x in eigs))


# ---------------------------------------------------------------------------
# pockets


def _winding(poly: Sequence[complex], z: complex) -> float:
    total = 0.0
    for i in range(len(poly)):
        a = poly[i] - z
        b = poly[(i + 1) % len(poly)] - z
        total += cmath.phase(b / a)
    return total / (2 * math.pi)


def pocket_polygon(path: BranchPath, interval: tuple[float, float], far: float) -> list[complex]:
    """Closed polygon: interval left to right, then the path back (rays cut at ``far``)."""
    a, b = interval
    v = list(path.vertices)
    left = v[0].real - far if path.left_ray else a
    right = v[-1].real + far if path.right_ray else b
    poly: list[complex] = [complex(left, 0.0), complex(right, 0.0)]
    if path.right_ray:
        poly.append(complex(right, v[-1].imag))
    tail = v[::-1]
    if not path.right_ray:
        tail = tail[1:]
    if not path.left_ray:
        tail = tail[:-1]
    poly.extend(tail)
    if path.left_ray:
        poly.append(complex(left, v[0].imag))
    return poly


def pocket_branch(c: Contour, z: complex, tol: float = 1e-12) -> int | None:
    """Index of the branch whose pocket contains ``z``, or ``None``."""
    if c.physical:
        return None
    z = complex(z)
    for k, path in enumerate(c.paths):
        span = max(abs(v) for v in path.vertices) + abs(z) + 10.0
        poly = pocket_polygon(path, _interval_of(path, c, k), span)
        dist = min(
            _point_segment_distance(z, poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))
        )
        if dist <= tol:
            raise BoundaryError(f"z={z} lies within {tol} of the boundary of pocket {k}")
        if abs(round(_winding(poly, z))) == 1:
            return k
    return None


def _interval_of(path: BranchPath, c: Contour, k: int) -> tuple[float, float]:
    v = path.vertices
    a = -math.inf if path.left_ray else v[0].real
    b = math.inf if path.right_ray else v[-1].real
    return a, b


def region_winding(c: Contour, z: complex) -> bool:
    """True iff ``z`` lies in ``D(Gamma_l)``, the pocket between the intervals and the paths."""
    return pocket_branch(c, z) is not None


@dataclass(frozen=True)
class Circle:
    """Positively oriented circle used for contour integrals in the ``z`` plane."""

    center: complex
    radius: float

    def nodes(self, M: int) -> tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes and the weights of ``dz`` (including ``2 pi / M``)."""
        theta = 2 * np.pi * np.arange(M) / M
        e = np.exp(1j * theta)
        z = self.center + self.radius * e
        dz = 1j * self.radius * e * (2 * np.pi / M)
        return z, dz

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) < self.radius
