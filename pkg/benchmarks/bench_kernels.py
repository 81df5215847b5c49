"""Time the compiled and pure-numpy hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--json out.json]

Both backends are called directly, so the env flag does not matter here.
Each pair of results is checked for agreement before timing is reported.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from touchauth import kernels
from touchauth.classify import SVM_MAX_ITER, SVM_TOL, rbf_kernel


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def svm_problem(n, d, rng):
    X = np.vstack([rng.normal(0, 1, (n // 2, d)), rng.normal(0.8, 1, (n - n // 2, d))])
    y = np.r_[np.ones(n // 2), -np.ones(n - n // 2)]
    return rbf_kernel(X, X, 1.0 / d), y


def bench_smo(sizes, repeats, rng):
    rows = []
    for n in sizes:
        K, y = svm_problem(n, 28, rng)
        t_np, (a_np, _, it_np, _) = best_of(lambda: kernels.smo_numpy(K, y, 1.0, SVM_TOL, SVM_MAX_ITER), repeats)
        row = {"kernel": "smo", "size": n, "numpy_s": t_np, "iterations": int(it_np)}
        if kernels.smo_numba is not None:
            kernels.smo_numba(K, y, 1.0, SVM_TOL, SVM_MAX_ITER)  # compile outside the timing
            t_nb, (a_nb, _, it_nb, _) = best_of(lambda: kernels.smo_numba(K, y, 1.0, SVM_TOL, SVM_MAX_ITER), repeats)
            if it_nb != it_np or not np.allclose(a_nb, a_np, atol=1e-9):
                raise SystemExit(f"smo backends disagree at n={n}")
            row["numba_s"] = t_nb
        rows.append(row)
    return rows


def bench_kd(sizes, repeats, rng, k=7, n_queries=200):
    rows = []
    for n in sizes:
        X = rng.normal(size=(n, 28))
        Q = rng.normal(size=(n_queries, 28))
        tree = kernels.build_kdtree(X)
        t_np, (i_np, _) = best_of(lambda: kernels.kd_query_numpy(X, *tree, Q, k), repeats)
        row = {"kernel": "kd_query", "size": n, "queries": n_queries, "k": k, "numpy_s": t_np}
        if kernels.kd_query_numba is not None:
            kernels.kd_query_numba(X, *tree, Q[:1], k)
            t_nb, (i_nb, _) = best_of(lambda: kernels.kd_query_numba(X, *tree, Q, k), repeats)
            if not np.array_equal(i_nb, i_np):
                raise SystemExit(f"kd backends disagree at n={n}")
            row["numba_s"] = t_nb
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--smo-sizes", default="200,400,800")
    p.add_argument("--kd-sizes", default="1000,4000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the rows as JSON")
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    rows = bench_smo([int(s) for s in args.smo_sizes.split(",")], args.repeats, rng)
    rows += bench_kd([int(s) for s in args.kd_sizes.split(",")], args.repeats, rng)

    print(f"{'kernel':<10}{'size':>7}{'numpy s':>11}{'numba s':>11}{'speedup':>9}")
    for r in rows:
        nb = r.get("numba_s")
        print(f"{r['kernel']:<10}{r['size']:>7}{r['numpy_s']:>11.4f}"
              + (f"{nb:>11.4f}{r['numpy_s'] / nb:>8.1f}x" if nb else f"{'n/a':>11}{'':>9}"))
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
