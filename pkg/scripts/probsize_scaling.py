#!/usr/bin/env python3
"""Solver-call counts versus problem size on BFS truncations of one base
graph, mirroring a road-network-style scaling sweep.

    python3 scripts/probsize_scaling.py --sizes 1000 2000 4000 8000
"""

import argparse
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mlqls.graphs import bfs_truncate, load_graph, planted_partition
from mlqls.harness import run_vcycle
from mlqls.solvers import SolverConfig


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[1000, 2000, 4000, 8000])
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--k-sub", type=int, default=20)
    parser.add_argument("--graph", default=None,
                        help="METIS file to truncate; default is a planted "
                             "32-community graph with 16384 nodes")
    parser.add_argument("--out", default="probsize.csv")
    args = parser.parse_args()

    if args.graph:
        base = load_graph(args.graph, "metis")
    else:
        base = planted_partition(16384, 32, 0.016, 0.0002, seed=800)
    solver = SolverConfig("exhaustive")

    rows = []
    medians = {}
    for size in args.sizes:
        g = bfs_truncate(base, size)
        calls = []
        for seed in range(args.seeds):
            rec = run_vcycle(g, "modularity", args.k_sub, solver, seed,
                             instance=f"trunc{size}")
            if rec.failed:
                print(f"size={size} seed={seed}: FAILED {rec.error}")
                continue
            calls.append(rec.total_solver_calls)
            rows.append((size, seed, rec.total_solver_calls,
                         rec.hierarchy_depth, rec.modularity,
                         rec.wall_time_s))
        medians[size] = statistics.median(calls)
        print(f"n={size}: median solver calls {medians[size]} "
              f"over {len(calls)} seeds")

    with open(args.out, "w") as fh:
        fh.write("n,seed,total_solver_calls,hierarchy_depth,modularity,"
                 "wall_time_s\n")
        for row in rows:
            fh.write(",".join(map(str, row)) + "\n")

    lo, hi = min(args.sizes), max(args.sizes)
    print(f"\ncalls({hi}) / calls({lo}) = {medians[hi] / medians[lo]:.2f} "
          f"(size ratio {hi / lo:.0f})")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
