"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on representative workloads under both backends and
prints a table of per-call times and speedups.  Invoke from the repository
root:

    python benchmarks/bench_kernels.py [--repeats 5]

Backend selection works exactly as in production: the numpy path is what
you get with ANDERSON2P_NO_NUMBA=1.
"""

import argparse
import importlib
import os
import time

import numpy as np


def _load_backend(use_numba: bool):
    if use_numba:
        os.environ.pop("ANDERSON2P_NO_NUMBA", None)
    else:
        os.environ["ANDERSON2P_NO_NUMBA"] = "1"
    import anderson2p.kernels as kernels

    importlib.reload(kernels)
    return kernels


def _time(fn, repeats):
    fn()  # warm-up (and JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(kernels):
    rng = np.random.default_rng(0)
    box_441 = np.array([[i, j] for i in range(-10, 11) for j in range(-10, 11)],
                       dtype=np.int64)
    box_1089 = np.array([[i, j] for i in range(-16, 17) for j in range(-16, 17)],
                        dtype=np.int64)
    sites_1m = rng.integers(-(2**31), 2**31, size=(1_000_000, 2))
    vals = rng.random(len(box_1089))
    dists = np.abs(box_1089).max(axis=1)
    return {
        "adjacency 441x441 (sup)": lambda: kernels.adjacency_matrix(box_441, "sup"),
        "adjacency 1089x1089 (l1)": lambda: kernels.adjacency_matrix(box_1089, "l1"),
        "pairwise 441x1089": lambda: kernels.pairwise_dist(box_441, box_1089, "sup"),
        "site hash 1e6 sites": lambda: kernels.uniform01(7, 3, sites_1m),
        "shell max 1089": lambda: kernels.shell_max(vals, dists, int(dists.max()) + 1),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    results = {}
    for use_numba in (False, True):
        kernels = _load_backend(use_numba)
        label = kernels.active_backend()
        for name, fn in workloads(kernels).items():
            results.setdefault(name, {})[label] = _time(fn, args.repeats)

    width = max(len(n) for n in results)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name, times in results.items():
        np_t = times.get("numpy")
        nb_t = times.get("numba")
        if nb_t is None:
            print(f"{name:<{width}}  {np_t * 1e3:>8.2f}ms  {'n/a':>10}  {'n/a':>8}")
            continue
        print(f"{name:<{width}}  {np_t * 1e3:>8.2f}ms  {nb_t * 1e3:>8.2f}ms"
              f"  {np_t / nb_t:>7.1f}x")


if __name__ == "__main__":
    main()
