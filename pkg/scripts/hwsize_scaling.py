#!/usr/bin/env python3
"""Solution quality versus subproblem size on a planted mini-benchmark.

Runs single V-cycles with the exhaustive solver over a grid of k_sub values
and seeds, then reports the mean and standard deviation of the per-graph
normalized modularity at each k_sub. Writes one CSV row per run.

    python3 scripts/hwsize_scaling.py --out hwsize.csv
"""

import argparse
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mlqls.graphs import planted_partition
from mlqls.harness import run_vcycle
from mlqls.solvers import SolverConfig
from mlqls.sweep import CSV_COLUMNS  # noqa: F401  (documented format lives there)

BENCHMARK = [
    ("mini0", 1000, 2, 0.030, 0.0020, 701),
    ("mini1", 1000, 4, 0.060, 0.0040, 702),
    ("mini2", 1000, 5, 0.080, 0.0050, 703),
    ("mini3", 1000, 2, 0.016, 0.0010, 704),
    ("mini4", 1000, 10, 0.150, 0.0060, 705),
]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--k-sub", type=int, nargs="+",
                        default=[8, 12, 16, 20, 24])
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--out", default="hwsize.csv")
    args = parser.parse_args()

    solver = SolverConfig("exhaustive")
    results: dict[str, dict[int, list[float]]] = {}
    rows = []
    for name, n, blocks, p_in, p_out, gseed in BENCHMARK:
        g = planted_partition(n, blocks, p_in, p_out, gseed)
        results[name] = {}
        for k_sub in args.k_sub:
            values = []
            for seed in range(args.seeds):
                rec = run_vcycle(g, "modularity", k_sub, solver, seed,
                                 instance=name)
                if rec.failed:
                    print(f"{name} k={k_sub} seed={seed}: FAILED {rec.error}")
                    continue
                values.append(rec.modularity)
                rows.append((name, k_sub, seed, rec.modularity,
                             rec.total_solver_calls, rec.wall_time_s))
            results[name][k_sub] = values
            print(f"{name} k_sub={k_sub}: median modularity "
                  f"{statistics.median(values):.4f}")

    with open(args.out, "w") as fh:
        fh.write("instance,k_sub,seed,modularity,total_solver_calls,"
                 "wall_time_s\n")
        for row in rows:
            fh.write(",".join(map(str, row)) + "\n")

    print("\nnormalized across the benchmark (1.0 = best value per graph):")
    for k_sub in args.k_sub:
        normed = []
        for name in results:
            best = max(max(v) for v in results[name].values())
            normed.extend(v / best for v in results[name][k_sub])
        print(f"  k_sub={k_sub:3d}: mean {statistics.mean(normed):.4f} "
              f"std {statistics.pstdev(normed):.4f}")
    print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
