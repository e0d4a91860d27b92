"""Benchmark: compiled Cython kernel vs the pure numpy fallback.

Times the pairwise log-scale scan (the dominant cost of exponent
estimation) on representative workloads and verifies both backends
produce identical readings.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from smalekit._kernels import _pure

try:
    from smalekit._kernels import _core
except ImportError:
    _core = None


def _cat_like(d):
    m = np.zeros((d, d))
    m[:2, :2] = [[2, 1], [1, 1]]
    if d == 4:
        m[2:, 2:] = [[3, 1], [2, 1]]
    return m, np.linalg.inv(m)


def _time(fn, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads, one repeat")
    args = parser.parse_args()
    repeats = 1 if args.quick else 3
    scale = 0.4 if args.quick else 1.0

    workloads = [
        ("stable scan, d=2", 2, 1, int(2000 * scale), 18),
        ("standard scan, d=2", 2, 0, int(2000 * scale), 30),
        ("stable scan, d=4", 4, 1, int(900 * scale), 13),
    ]
    rng = np.random.default_rng(0)
    print(f"{'workload':<24} {'N':>6} {'pure [s]':>10} {'compiled [s]':>13} "
          f"{'speedup':>8}")
    for name, d, side, n, n_max in workloads:
        m, inv = _cat_like(d)
        pts = rng.random((n, d))
        t_pure, ref = _time(
            lambda: _pure.ell_matrix(pts, m, inv, 0.05, side, n_max), repeats
        )
        if _core is None:
            print(f"{name:<24} {n:>6} {t_pure:>10.3f} {'unavailable':>13}")
            continue
        t_core, out = _time(
            lambda: _core.ell_matrix(pts, m, inv, 0.05, side, n_max), repeats
        )
        assert np.array_equal(ref, out), "backends disagree"
        print(f"{name:<24} {n:>6} {t_pure:>10.3f} {t_core:>13.3f} "
              f"{t_pure / t_core:>7.1f}x")


if __name__ == "__main__":
    main()
