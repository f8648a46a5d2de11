"""SVG scatter of the eigenvalues of ``H1^(l)`` over the sheet geometry."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .contour import Contour  # noqa: E402
from .model import SpectralScenario  # noqa: E402

CLASS_COLORS = {"real_isolated": "tab:blue", "real_embedded": "tab:green", "resonance": "tab:red"}


def spectrum_svg(s: SpectralScenario, c: Contour, evs, path: str | Path, title: str = "") -> Path:
    """Branches as thick segments, atoms as crosses, contour paths, eigenvalues by class."""
    plt.rcParams["svg.hashsalt"] = "sheetsolve"
    xs = [e.value.real for e in evs] + [a.mu for a in s.atoms]
    xs += [v.real for p in c.paths for v in p.vertices]
    xs += [x for br in s.branches for x in br.interval if math.isfinite(x)]
    lo, hi = min(xs) - 0.5, max(xs) + 0.5
    depth = max([abs(v.imag) for p in c.paths for v in p.vertices] + [abs(e.value.imag) for e in evs] + [0.1])

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.axhline(0.0, color="0.6", lw=0.8)
    for br in s.branches:
        a, b = max(br.a, lo), min(br.b, hi)
        ax.plot([a, b], [0, 0], color="0.2", lw=4, solid_capstyle="butt")
    for a in s.atoms:
        ax.plot([a.mu], [0], "kx", ms=9, mew=2)
    for k, p in enumerate(c.paths):
        pts = list(p.vertices)
        if p.left_ray:
            pts.insert(0, complex(lo, pts[0].imag))
        if p.right_ray:
            pts.append(complex(hi, pts[-1].imag))
        ax.plot([z.real for z in pts], [z.imag for z in pts], "--", color="tab:purple", lw=1.2,
                label="contour" if k == 0 else None)
    for kind, color in CLASS_COLORS.items():
        pts = [e.value for e in evs if e.kind == kind]
        if pts:
            ax.plot([z.real for z in pts], [z.imag for z in pts], "o", color=color, ms=6, label=kind)
    ax.set_xlim(lo, hi)
    ax.set_ylim(-1.2 * depth, 1.2 * depth)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title or f"{s.name} sheet {c.label}")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
