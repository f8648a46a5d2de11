"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``SHEETSOLVE_PURE_PYTHON=1`` to force the numpy fallback.  Without an
explicit choice the compiled loop is used up to ``CROSSOVER_N``; above it
batched LAPACK solves are faster (see ``benchmarks/bench_kernels.py``).
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("SHEETSOLVE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _impl = _compiled
    BACKEND = "cython"
else:
    _impl = _kernels_py
    BACKEND = "python"


CROSSOVER_N = 10


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.complex128)


def resolvent_sum(Y, mu, K, backend: str | None = None) -> np.ndarray:
    impl = _pick(backend, len(Y))
    return impl.resolvent_sum(_c(Y), _c(mu), _c(K))


def sandwich_sum(L, R, mu, K, backend: str | None = None) -> np.ndarray:
    impl = _pick(backend, len(L))
    return impl.sandwich_sum(_c(L), _c(R), _c(mu), _c(K))


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def _pick(backend, n: int = 1):
    if backend is None:
        return _impl if n <= CROSSOVER_N else _kernels_py
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
