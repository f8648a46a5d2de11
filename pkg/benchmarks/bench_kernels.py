"""Compare the compiled kernels with the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``.  Prints the median time of
``resolvent_sum`` / ``sandwich_sum`` for a few matrix sizes and node counts,
the largest difference between the two backends, and an end-to-end solve.
"""

import argparse
import statistics
import time

import numpy as np

from sheetsolve import _backend
from sheetsolve.io import resolve_contour
from sheetsolve.scenarios import SHIPPED
from sheetsolve.solver import solve_basic_equation


def median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def random_case(n, q, rng):
    Y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    mu = rng.uniform(-5, 5, q) - 3j
    K = rng.standard_normal((q, n, n)) + 1j * rng.standard_normal((q, n, n))
    return Y, mu, K


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)
    backends = _backend.available_backends()
    print(f"backends: {', '.join(backends)} (default {_backend.BACKEND})")
    rng = np.random.default_rng(1)
    print(f"{'kernel':<14}{'n':>4}{'nodes':>7}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>11}")
    for n, q in [(1, 1344), (3, 768), (3, 4096), (8, 1024), (16, 512)]:
        Y, mu, K = random_case(n, q, rng)
        L = Y.conj().T
        for name, call in [
            ("resolvent", lambda b: _backend.resolvent_sum(Y, mu, K, b)),
            ("sandwich", lambda b: _backend.sandwich_sum(L, Y, mu, K, b)),
        ]:
            t = {b: median_time(lambda: call(b), args.repeat) for b in backends}
            vals = {b: call(b) for b in backends}
            diff = max(np.abs(vals[b] - vals["python"]).max() for b in backends)
            speed = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{name:<14}{n:>4}{q:>7}" + "".join(f"{t[b] * 1e3:>10.3f}ms" for b in backends)
                  + f"{speed:>9.2f}x{diff:>11.1e}")
    print()
    for key in ("l1", "gap3"):
        sf = SHIPPED[key]()
        c, _ = resolve_contour(sf, "-" * sf.scenario.m)
        sols = {}
        t = {}
        for b in backends:
            t[b] = median_time(lambda: sols.__setitem__(b, solve_basic_equation(sf.scenario, c, backend=b)), 3)
        diff = max(np.abs(sols[b].x - sols["python"].x).max() for b in backends)
        print(f"solve {key:<8}" + "".join(f"{b}={t[b] * 1e3:.1f}ms  " for b in backends) + f"max diff {diff:.1e}")


if __name__ == "__main__":
    main()
