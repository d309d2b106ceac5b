"""Compare the numba and numpy paths of the kernel assembly and of ``log D``.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``. Numba
compilation happens in a warm-up call outside the timed region.
"""
import argparse
import time

import numpy as np

from ebres import CoeffPair, CompactCoeff
from ebres._accel import NUMBA_ENABLED
from ebres.fredholm import log_det
from ebres.kernels import operator_kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        print("numba disabled through EBRES_DISABLE_NUMBA; the numba column repeats numpy")
    backends = ("numba", "numpy") if NUMBA_ENABLED else ("numpy", "numpy")

    print(f"{'kernel grid':>12} {'k':>10} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8} {'rel diff':>9}")
    for n in (128, 256, 512):
        x = np.sort(np.random.default_rng(0).uniform(0, 1, n))
        X, Y = np.meshgrid(x, x, indexing="ij")
        for k in (2 + 1j, 20 - 15j):
            t = [best_of(lambda b=b: operator_kernels(X, Y, k, backend=b), args.repeat) for b in backends]
            ref = operator_kernels(X, Y, k, backend="numpy")
            diff = np.max(np.abs(operator_kernels(X, Y, k, backend=backends[0]) - ref)) / np.max(np.abs(ref))
            print(f"{n:>9}^2 {str(k):>10} {1e3 * t[0]:11.2f} {1e3 * t[1]:11.2f} {t[1] / t[0]:8.2f} {diff:9.1e}")

    step = CoeffPair(CompactCoeff.constant(2.0, 1.0), CompactCoeff.zero(1.0))
    print(f"\n{'log D order':>12} {'k':>10} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8} {'rel diff':>9}")
    for order in (32, 64, 128):
        for k in (3 + 3j, -8 + 2j):
            t = [best_of(lambda b=b: log_det(step, k, order, backend=b), args.repeat) for b in backends]
            diff = abs(log_det(step, k, order, backend=backends[0])[0] - log_det(step, k, order, backend="numpy")[0])
            print(f"{order:>12} {str(k):>10} {1e3 * t[0]:11.2f} {1e3 * t[1]:11.2f} {t[1] / t[0]:8.2f} {diff:9.1e}")


if __name__ == "__main__":
    main()
