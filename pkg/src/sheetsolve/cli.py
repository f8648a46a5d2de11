"""``sheetsolve`` command line: validate, solve, spectrum, verify, sweep."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .contour import ContourError, parse_sheet, sheet_str
from .io import dump_json, encode_matrix, load_scenario, path_to_dict, resolve_contour
from .model import ScenarioError, spectral_norm, validate_scenario
from .solver import ConvergenceError, SolvabilityError, solve_basic_equation
from .transfer import SpectralCollisionError

EXIT_OK, EXIT_INVALID, EXIT_UNSOLVABLE, EXIT_DIVERGED, EXIT_CHECKS = 0, 2, 3, 4, 5
CSV_HEADER = ["re", "im", "alg_mult", "geo_mult", "class", "branch"]


@dataclass
class RunConfig:
    command: str
    scenario: Path
    sheet: str | None = None
    tol: float = 1e-12
    out: Path = Path(".")
    seed: int = 0
    scale: tuple[float, float, int] | None = None
    oracle_n: int = 512


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


def _parse_scale(text: str) -> tuple[float, float, int]:
    try:
        a, b, n = text.split(":")
        out = float(a), float(b), int(n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--scale expects A:B:N, got {text!r}") from exc
    if out[2] < 1:
        raise argparse.ArgumentTypeError("--scale needs N >= 1")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sheetsolve", description="Resonances from the continued transfer function.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("validate", "check a scenario file"),
        ("solve", "solve the basic equation on one sheet"),
        ("spectrum", "eigenvalues of H1 on one sheet (CSV + SVG)"),
        ("verify", "run the theorem-check matrix"),
        ("sweep", "scale the coupling and track the eigenvalues"),
    ]:
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--scenario", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("."))
        sp.add_argument("--seed", type=int, default=0)
        if name != "validate":
            sp.add_argument("--sheet", default=None, help='one sign per branch, e.g. "-+"; default all minus')
            sp.add_argument("--tol", type=float, default=1e-12)
        if name == "verify":
            sp.add_argument("--oracle-n", type=int, default=512, help="nodes per branch of the discretized operator")
        if name == "sweep":
            sp.add_argument("--scale", type=_parse_scale, required=True, metavar="A:B:N")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        ns.command,
        ns.scenario,
        getattr(ns, "sheet", None),
        getattr(ns, "tol", 1e-12),
        ns.out,
        ns.seed,
        getattr(ns, "scale", None),
        getattr(ns, "oracle_n", 512),
    )


# ---------------------------------------------------------------------------
# commands


def _load(cfg: RunConfig):
    try:
        sf = load_scenario(cfg.scenario)
    except (ScenarioError, KeyError, TypeError, ValueError) as exc:
        raise CLIError(EXIT_INVALID, "ScenarioError", str(exc)) from exc
    rep = validate_scenario(sf.scenario)
    return sf, rep


def _sheet(cfg: RunConfig, m: int) -> str:
    text = cfg.sheet.replace("\u2212", "-") if cfg.sheet is not None else "-" * m
    try:
        signs = parse_sheet(text)
    except ValueError as exc:
        raise CLIError(EXIT_INVALID, "SheetError", str(exc)) from exc
    if len(signs) != m:
        raise CLIError(EXIT_INVALID, "SheetError", f"sheet {text!r} needs {m} signs, one per branch")
    return sheet_str(signs)


def _solve(cfg: RunConfig, sf, sheet: str, s=None):
    s = s or sf.scenario
    try:
        c, source = resolve_contour(sf, sheet)
    except (ContourError, ScenarioError) as exc:
        raise CLIError(EXIT_INVALID, type(exc).__name__, str(exc)) from exc
    except SolvabilityError as exc:
        raise CLIError(EXIT_UNSOLVABLE, "SolvabilityError", str(exc)) from exc
    try:
        sol = solve_basic_equation(s, c, tol=cfg.tol)
    except SolvabilityError as exc:
        raise CLIError(EXIT_UNSOLVABLE, "SolvabilityError", str(exc)) from exc
    except (ConvergenceError, SpectralCollisionError) as exc:
        raise CLIError(EXIT_DIVERGED, type(exc).__name__, str(exc)) from exc
    return c, source, sol


def _header(cfg: RunConfig, sf, sheet: str | None = None) -> dict:
    return {
        "scenario": sf.scenario.name,
        "scenario_file": cfg.scenario.name,
        "sheet": sheet,
        "seed": cfg.seed,
        "tol": cfg.tol,
    }


def cmd_validate(cfg: RunConfig) -> int:
    sf, rep = _load(cfg)
    doc = {**_header(cfg, sf), **rep.to_dict()}
    dump_json(doc, cfg.out / "validation.json")
    if not rep.ok:
        raise CLIError(EXIT_INVALID, "ValidationError", "; ".join(rep.errors))
    return EXIT_OK


def _require_valid(rep):
    if not rep.ok:
        raise CLIError(EXIT_INVALID, "ValidationError", "; ".join(rep.errors))


def solution_dict(sol, c, source: str) -> dict:
    cert = sol.certificate
    return {
        "x": encode_matrix(sol.x),
        "h1": encode_matrix(sol.h1),
        "norm_x": spectral_norm(sol.x),
        "certificate": cert.to_dict(),
        "iterations": sol.iterations,
        "final_residual": sol.final_residual,
        "quadrature_error": sol.quadrature_error,
        "tol": sol.tol,
        "max_ratio": sol.max_ratio,
        "ratio_bound": cert.rate + 0.05 if cert.condition_ok else None,
        "ratios": sol.ratios,
        "ball_ok": sol.ball_ok,
        "ratio_ok": sol.ratio_ok,
        "uncertified": sol.uncertified,
        "mode": sol.mode,
        "contour": {
            "source": source,
            "rule": c.rule.to_dict(),
            "paths": [path_to_dict(p) for p in c.paths],
        },
    }


def cmd_solve(cfg: RunConfig) -> int:
    sf, rep = _load(cfg)
    _require_valid(rep)
    sheet = _sheet(cfg, sf.scenario.m)
    c, source, sol = _solve(cfg, sf, sheet)
    dump_json({**_header(cfg, sf, sheet), "solution": solution_dict(sol, c, source)}, cfg.out / "solution.json")
    return EXIT_OK


def _csv_text(rows: list[list], header: list[str]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_spectrum(cfg: RunConfig) -> int:
    from .plotting import spectrum_svg
    from .spectral import sheet_spectrum

    sf, rep = _load(cfg)
    _require_valid(rep)
    sheet = _sheet(cfg, sf.scenario.m)
    c, source, sol = _solve(cfg, sf, sheet)
    evs = sheet_spectrum(sf.scenario, c, sol)
    rows = [
        [_fmt(e.value.real), _fmt(e.value.imag), e.algebraic_multiplicity, e.geometric_multiplicity, e.kind,
         "" if e.branch is None else e.branch]
        for e in evs
    ]
    (cfg.out / "eigenvalues.csv").write_text(_csv_text(rows, CSV_HEADER), encoding="utf-8")
    dump_json(
        {
            **_header(cfg, sf, sheet),
            "eigenvalues": [e.to_dict() for e in evs],
            "eigenvalue_error_estimate": sol.quadrature_error + sol.final_residual,
            "r_min": sol.certificate.r_min,
        },
        cfg.out / "spectrum.json",
    )
    spectrum_svg(sf.scenario, c, evs, cfg.out / "spectrum.svg")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .checks import verify

    sf, rep = _load(cfg)
    _require_valid(rep)
    sheet = _sheet(cfg, sf.scenario.m)
    try:
        report = verify(sf, sheet, seed=cfg.seed, tol=cfg.tol, oracle_N=cfg.oracle_n)
    except SolvabilityError as exc:
        raise CLIError(EXIT_UNSOLVABLE, "SolvabilityError", str(exc)) from exc
    except (ConvergenceError, SpectralCollisionError) as exc:
        raise CLIError(EXIT_DIVERGED, type(exc).__name__, str(exc)) from exc
    doc = {**_header(cfg, sf, sheet), **report.to_dict()}
    dump_json(doc, cfg.out / "verify.json")
    if not report.passed:
        names = ", ".join(c.name for c in report.failed())
        raise CLIError(EXIT_CHECKS, "CheckFailure", f"failed checks: {names}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    from .spectral import sheet_spectrum

    sf, rep = _load(cfg)
    _require_valid(rep)
    sheet = _sheet(cfg, sf.scenario.m)
    a, b, n = cfg.scale
    header = ["t", "index", "re", "im", "alg_mult", "class", "branch", "error_estimate", "status"]
    rows = []
    for t in np.linspace(a, b, n):
        t = float(f"{t:.12g}")  # clean grid values in the CSV
        s_t = sf.scenario.scaled(t)
        try:
            c, _, sol = _solve(cfg, sf, sheet, s_t)
        except CLIError as exc:
            if exc.code == EXIT_INVALID:
                raise
            rows.append([_fmt(t), "", "", "", "", "", "", "", exc.kind])
            continue
        err = sol.quadrature_error + sol.final_residual
        for i, e in enumerate(sheet_spectrum(s_t, c, sol)):
            rows.append([_fmt(t), i, _fmt(e.value.real), _fmt(e.value.imag), e.algebraic_multiplicity, e.kind,
                         "" if e.branch is None else e.branch, _fmt(err), "ok"])
    (cfg.out / "sweep.csv").write_text(_csv_text(rows, header), encoding="utf-8")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "spectrum": cmd_spectrum, "verify": cmd_verify, "sweep": cmd_sweep}


def run(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[cfg.command](cfg)


def _bind_sheet(argv: list[str]) -> list[str]:
    # "-+" or "--" look like options to argparse, which also drops a bare "--"
    # value; U+2212 is read as a minus by parse_sheet
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--sheet" and i + 1 < len(argv):
            out.append("--sheet=" + argv[i + 1].replace("-", "\u2212"))
            i += 2
        elif argv[i].startswith("--sheet="):
            out.append("--sheet=" + argv[i][8:].replace("-", "\u2212"))
            i += 1
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = build_parser().parse_args(_bind_sheet(argv))
    cfg = _config(ns)
    try:
        return run(cfg)
    except CLIError as exc:
        err = {"error": exc.kind, "message": str(exc), "exit_code": exc.code, "command": cfg.command}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
