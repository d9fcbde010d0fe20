#!/usr/bin/env python3
"""Benchmark the compiled Euler kernels against the pure-Python fallback.

Both backends must produce bit-identical paths; the point of the compiled
core is the per-step Python overhead, which dominates for long grids.

usage: python scripts/benchmark_core.py [n_steps] [m_replicas]
"""

import sys
import time

import numpy as np

from fraclan.fbm import sample_fgn_batch
from fraclan.grids import Hurst, TimeGrid
from fraclan.rng import replica_stream
from fraclan.sde import SdeConfig, core_backend, drift_by_name, euler_solve_batch


def bench(drift_name, cfg, drift, db, use_core, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = euler_solve_batch(cfg, drift, db, use_core=use_core)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    m = int(sys.argv[2]) if len(sys.argv) > 2 else 50
    h = Hurst(0.7)
    grid = TimeGrid(horizon=n * 0.01, n_steps=n)
    db = sample_fgn_batch(grid, h, replica_stream(0, 0), m)

    print(f"backend available: {core_backend()}   grid: {m} x {n} steps")
    if core_backend() != "cython":
        print("compiled core not built; benchmarking fallback only")

    for name, theta in (("fou", [1.0]), ("tanh", [2.0, 1.0]), ("tanh_scale", [2.0, 1.0])):
        drift = drift_by_name(name)
        cfg = SdeConfig([0.0], [[1.0]], theta, grid)
        t_py, out_py = bench(name, cfg, drift, db, use_core=False)
        if core_backend() == "cython":
            t_cy, out_cy = bench(name, cfg, drift, db, use_core=True)
            # fou is pure arithmetic and must agree bitwise; the tanh kernels
            # differ from numpy's tanh by ULPs, bounded by the contraction.
            gap = float(np.max(np.abs(out_py - out_cy)))
            ok = gap == 0.0 if name == "fou" else gap < 1e-13
            print(
                f"{name:>11}: python {t_py*1e3:8.1f} ms   cython {t_cy*1e3:8.1f} ms   "
                f"speedup {t_py/t_cy:5.1f}x   max gap {gap:.1e}"
            )
            if not ok:
                raise SystemExit("backend mismatch!")
        else:
            print(f"{name:>11}: python {t_py*1e3:8.1f} ms")


if __name__ == "__main__":
    main()
