#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-NumPy fallback.

Times distance correlation and the Kraskov MI estimator at several sample
sizes, checks both backends agree numerically, and prints the speedup.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""
import argparse
import time

import numpy as np

from equilab._core import BACKEND, _kernels_py, kernels


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if BACKEND != "cython":
        print(f"active backend is {BACKEND!r}; compiled extension "
              "unavailable, nothing to compare")
        return

    rng = np.random.default_rng(0)
    print(f"{'kernel':<10} {'n':>6} {'compiled':>12} {'numpy':>12} "
          f"{'speedup':>8}")
    for name, sizes, call in (
            ("dcor", (100, 500, 1000, 2000),
             lambda mod, x, y: mod.dcor(x, y)),
            ("ksg_mi", (500, 1000, 2000, 5000),
             lambda mod, x, y: mod.ksg_mi(x, y, 6))):
        for n in sizes:
            x = rng.standard_normal(n)
            y = np.sin(3 * x) + 0.5 * rng.standard_normal(n)
            a = call(kernels, x, y)
            b = call(_kernels_py, x, y)
            assert abs(a - b) < 1e-9, (name, n, a, b)
            tc = best_of(lambda: call(kernels, x, y), args.repeats)
            tp = best_of(lambda: call(_kernels_py, x, y), args.repeats)
            print(f"{name:<10} {n:>6} {tc * 1e3:>10.2f}ms "
                  f"{tp * 1e3:>10.2f}ms {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
