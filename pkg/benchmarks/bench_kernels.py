"""Compiled vs pure-Python kernels: wall time and agreement.

    python3 benchmarks/bench_kernels.py [--sizes 50 100 200] [--repeat 3]

Each size solves one random quadratic-cost transport problem between
point clouds in the half-plane with both back ends and checks that the
two return the same basis and flows.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sharptrace import kernels
from sharptrace.transport import DiscreteMeasure, solve_discrete_ot


def _problem(k: int, rng):
    X = rng.uniform(-1.0, 1.0, size=(k, 2))
    Y = rng.uniform(-1.0, 1.0, size=(k, 2))
    X[:, 0] = np.abs(X[:, 0])
    Y[:, 0] = np.abs(Y[:, 0])
    a = rng.uniform(0.5, 1.5, size=k)
    b = rng.uniform(0.5, 1.5, size=k)
    b *= a.sum() / b.sum()
    return DiscreteMeasure(X, a), DiscreteMeasure(Y, b)


def _best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if "cython" not in kernels.available():
        print("compiled kernels not built; run `python3 setup.py build_ext --inplace`")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'size':>8}{'python s':>12}{'cython s':>12}{'speedup':>10}{'pivots':>9}  same")
    for k in args.sizes:
        mu, nu = _problem(k, rng)
        tp, pp = _best_time(lambda: solve_discrete_ot(mu, nu, backend="python"), args.repeat)
        tc, pc = _best_time(lambda: solve_discrete_ot(mu, nu, backend="cython"), args.repeat)
        same = (
            np.array_equal(pp.rows, pc.rows)
            and np.array_equal(pp.cols, pc.cols)
            and np.array_equal(pp.mass, pc.mass)
        )
        print(f"{'transport_simplex':<18}{k:>8}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}{pc.iterations:>9}  {same}")
    eigs = np.exp(rng.uniform(-2.0, 2.0, size=(200_000, 3)))
    tp, gp = _best_time(lambda: kernels.backend("python").ag_gaps(eigs, 4.0), args.repeat)
    tc, gc = _best_time(lambda: kernels.backend("cython").ag_gaps(eigs, 4.0), args.repeat)
    same = bool(np.max(np.abs(gp - gc)) <= 1e-14)
    print(f"{'ag_gaps':<18}{len(eigs):>8}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}{'':>9}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
