"""Compare the numba and pure-numpy cost-table kernels.

    python benchmarks/bench_kernels.py --n 5000 --step 25 --repeat 3

Prints wall time per backend and the largest disagreement between them.
"""
import argparse
import time

import numpy as np

from whittlecp import defaults
from whittlecp.segmentation import build_candidate_grid, build_cost_table
from whittlecp.spectral import build_prefix
from whittlecp.synthesis import ProcessSpec, synthesize


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--step", type=int, default=None)
    ap.add_argument("--min-seg", type=int, default=None)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    spec = ProcessSpec.single("farima00", (0.4, 0.1), (0.5,), n=args.n)
    x = synthesize(spec, args.seed).values
    prefix = build_prefix(x, defaults.bandwidth(args.n))
    grid = build_candidate_grid(args.n, args.step, args.min_seg)
    npairs = int(grid.admissible().sum())
    print(f"n={args.n} m={prefix.m} nodes={len(grid.nodes)} pairs={npairs}")

    build_cost_table(prefix, grid, backend="numba")  # JIT warm-up
    results = {}
    for backend in ("numba", "numpy"):
        t, table = best_of(lambda: build_cost_table(prefix, grid, backend=backend), args.repeat)
        results[backend] = table
        print(f"{backend:>6}: {t:8.3f} s  ({1e6 * t / npairs:7.2f} us/pair)")

    a, b = results["numba"], results["numpy"]
    fin = np.isfinite(a.cost)
    print(f"max |cost diff| = {np.max(np.abs(a.cost[fin] - b.cost[fin])):.3e}")
    print(f"max |d diff|    = {np.nanmax(np.abs(a.dmin - b.dmin)):.3e}")


if __name__ == "__main__":
    main()
