"""Scenario files (JSON) and report serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .contour import (
    BranchPath,
    Contour,
    QuadratureRule,
    build_contour,
    contour_for_sheet,
    max_depth,
    parse_sheet,
    sheet_str,
)
from .model import ACBranch, AnalyticDensity, Atom, Gauss, Lorentz, PolyBump, ScenarioError, SpectralScenario

PROFILES = {"polybump": PolyBump, "lorentz": Lorentz, "gauss": Gauss}


# ---------------------------------------------------------------------------
# scalar encodings


def _num(x) -> float:
    if isinstance(x, str):
        t = x.strip().lower()
        if t in ("inf", "+inf", "infinity"):
            return math.inf
        if t in ("-inf", "-infinity"):
            return -math.inf
        raise ScenarioError(f"bad number {x!r}")
    return float(x)


def _cplx(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ScenarioError(f"complex entries are [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def _matrix(rows) -> np.ndarray:
    try:
        return np.array([[_cplx(v) for v in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad matrix: {exc}") from exc


def encode_matrix(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return [[v.real if v.imag == 0 else [v.real, v.imag] for v in row] for row in a.tolist()]


def encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _encode_bound(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# scenario files


@dataclass
class ScenarioFile:
    scenario: SpectralScenario
    contours: dict[str, dict] = field(default_factory=dict)
    rule: QuadratureRule = field(default_factory=QuadratureRule)
    path: str | None = None


def _profile(d: dict):
    d = dict(d)
    kind = str(d.pop("kind", "")).lower()
    cls = PROFILES.get(kind)
    if cls is None:
        raise ScenarioError(f"unknown profile kind {kind!r}; expected one of {sorted(PROFILES)}")
    try:
        return cls(**{k: float(v) if k != "p" and k != "q" else int(v) for k, v in d.items()})
    except TypeError as exc:
        raise ScenarioError(f"bad {kind} parameters: {exc}") from exc


def scenario_from_dict(data: dict, path: str | None = None) -> ScenarioFile:
    if not isinstance(data, dict) or "a1" not in data:
        raise ScenarioError("scenario must be an object with at least the key 'a1'")
    a1 = _matrix(data["a1"])
    n = a1.shape[0]

    def mat(rows, what):
        m = _matrix(rows)
        if m.shape != (n, n):
            raise ScenarioError(f"{what} has shape {m.shape}, expected {(n, n)}")
        return m

    atoms = tuple(Atom(_num(a["mu"]), mat(a["weight"], "atom weight")) for a in data.get("atoms", []))
    branches = []
    for k, b in enumerate(data.get("branches", [])):
        iv = b.get("interval")
        if not isinstance(iv, (list, tuple)) or len(iv) != 2:
            raise ScenarioError(f"branch {k}: interval must be [a, b]")
        terms = tuple((_profile(t["profile"]), mat(t["matrix"], f"branch {k} matrix")) for t in b.get("terms", []))
        branches.append(ACBranch((_num(iv[0]), _num(iv[1])), AnalyticDensity(terms)))
    s = SpectralScenario(a1, atoms, tuple(branches), str(data.get("name", "")))
    rule = QuadratureRule(**data.get("rule", {}))
    contours = {}
    for key, spec in data.get("contours", {}).items():
        contours[sheet_str(parse_sheet(key))] = spec
    return ScenarioFile(s, contours, rule, path)


def load_scenario(path: str | Path) -> ScenarioFile:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data, str(p))


def scenario_to_dict(sf: ScenarioFile | SpectralScenario) -> dict:
    if isinstance(sf, SpectralScenario):
        sf = ScenarioFile(sf)
    s = sf.scenario
    out: dict[str, Any] = {"name": s.name, "a1": encode_matrix(s.a1)}
    out["atoms"] = [{"mu": a.mu, "weight": encode_matrix(a.weight)} for a in s.atoms]
    out["branches"] = [
        {
            "interval": [_encode_bound(b.a), _encode_bound(b.b)],
            "terms": [
                {"profile": {"kind": p.kind, **p.__dict__}, "matrix": encode_matrix(g)} for p, g in b.density.terms
            ],
        }
        for b in s.branches
    ]
    out["contours"] = sf.contours
    out["rule"] = sf.rule.to_dict()
    return out


def dump_json(obj, path: str | Path | None = None) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)."""
    text = json.dumps(obj, sort_keys=True, indent=2, default=_default, allow_nan=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _default(o):
    if isinstance(o, np.ndarray):
        if np.iscomplexobj(o):
            return encode_matrix(o) if o.ndim == 2 else [encode_complex(z) for z in o.ravel()]
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return encode_complex(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# ---------------------------------------------------------------------------
# contours from file specs


def contour_from_spec(s: SpectralScenario, sheet: str, spec: dict, rule: QuadratureRule) -> Contour:
    from .contour import depth_contour

    if "paths" in spec:
        geo = []
        for p in spec["paths"]:
            verts = tuple(_cplx(v) for v in p["vertices"])
            geo.append({"vertices": verts, **{k: p[k] for k in ("left_ray", "right_ray") if k in p}})
        return build_contour(s, sheet, geo, rule)
    if "depths" in spec:
        return depth_contour(s, sheet, [float(d) for d in spec["depths"]], rule)
    if "depth" in spec:
        return depth_contour(s, sheet, float(spec["depth"]), rule)
    raise ScenarioError(f"contour spec for sheet {sheet!r} needs 'paths', 'depths' or 'depth'")


def default_depths(s: SpectralScenario, count: int = 19) -> list[float]:
    top = min((max_depth(b) for b in s.branches), default=1.0)
    return [float(x) for x in np.linspace(0.05, 0.95, count) * top]


def resolve_contour(sf: ScenarioFile, sheet: str) -> tuple[Contour, str]:
    """Contour for ``sheet``: given in the file, mirrored from another sheet, or
    the member of the standard depth family with the smallest ``r_min``."""
    s = sf.scenario
    key = sheet_str(parse_sheet(sheet))
    if len(key) != s.m:
        raise ScenarioError(f"sheet {sheet!r} has {len(key)} signs but the scenario has {s.m} branches")
    if key in sf.contours:
        return contour_from_spec(s, key, sf.contours[key], sf.rule), "file"
    for other, spec in sorted(sf.contours.items()):
        base = contour_from_spec(s, other, spec, sf.rule)
        return contour_for_sheet(base, key), f"reflected from {other}"
    from .solver import depth_family, estimate_r0

    _, c = estimate_r0(s, depth_family(s, key, default_depths(s), sf.rule))
    return c, "depth family"


def path_to_dict(p: BranchPath) -> dict:
    return {
        "vertices": [encode_complex(v) for v in p.vertices],
        "left_ray": p.left_ray,
        "right_ray": p.right_ray,
        "left_cut": p.left_cut,
        "right_cut": p.right_cut,
    }
