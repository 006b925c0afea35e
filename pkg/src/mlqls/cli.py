"""Command line entry points: solve one instance, run a sweep, or generate
a benchmark graph."""

from __future__ import annotations

import argparse
import json
import sys

from .graphs import load_graph, planted_partition, save_graph
from .harness import RunRecord, VCycleOptions, run_vcycle
from .objective import ProblemKind
from .solvers import SAParams, SolverConfig
from .sweep import load_sweep_config, run_sweep, write_csv, write_summary

RUN_SCHEMA_VERSION = 1

_PROBLEMS = {"gp": ProblemKind.GP, "mod": ProblemKind.MODULARITY}


def _record_to_json(record: RunRecord) -> dict:
    doc = {
        "schema_version": RUN_SCHEMA_VERSION,
        "instance": record.instance,
        "problem": record.problem,
        "k_sub": record.k_sub,
        "solver": record.solver,
        "seed": record.seed,
        "n": record.n,
        "hierarchy_depth": record.hierarchy_depth,
        "coarsest_direct": record.coarsest_direct,
        "level_iterations": record.level_iterations,
        "total_solver_calls": record.total_solver_calls,
        "cut": record.cut,
        "modularity": record.modularity,
        "imbalance": record.imbalance,
        "objective": record.objective,
        "objective_trace": record.objective_trace,
        "balanced": record.balanced,
        "stalled_coarsening": record.stalled_coarsening,
        "wall_time_s": record.wall_time_s,
        "failed": record.failed,
        "error": record.error,
        "spins": None if record.spins is None else record.spins.tolist(),
    }
    return doc


def _add_solve_parser(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("solve", help="run one V-cycle on one instance")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", choices=["metis", "edgelist"], default="metis")
    p.add_argument("--problem", choices=sorted(_PROBLEMS), required=True)
    p.add_argument("--k-sub", type=int, required=True)
    p.add_argument("--solver", choices=["exhaustive", "sa", "external"],
                   default="exhaustive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=["separate", "naive", "none"],
                   default="none")
    p.add_argument("--levels", type=int, default=None,
                   help="quantization levels for --precision")
    p.add_argument("--external-cmd", default=None)
    p.add_argument("--external-timeout", type=float, default=60.0)
    p.add_argument("--sa-samples", type=int, default=1000)
    p.add_argument("--sa-sweeps", type=int, default=50)
    p.add_argument("--patience", type=int, default=None,
                   help="consecutive non-improving solves before a level "
                        "converges (default 1 exhaustive, 3 stochastic)")
    p.add_argument("--alpha", type=float, default=None,
                   help="balance penalty constant (gp only)")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--dump-hierarchy", default=None,
                   help="write per-level {n, m_level, sum_volume} JSON lines")
    p.add_argument("--out", required=True)


def _cmd_solve(args: argparse.Namespace) -> int:
    g = load_graph(args.graph, args.format)
    solver_cfg = SolverConfig(
        name=args.solver,
        sa=SAParams(num_samples=args.sa_samples, sweeps=args.sa_sweeps),
        external_cmd=args.external_cmd,
        external_timeout=args.external_timeout,
    )
    options = VCycleOptions(
        precision_mode=args.precision,
        precision_levels=args.levels,
        patience=args.patience,
    )
    if args.dump_hierarchy:
        from .coarsen import build_hierarchy
        from .objective import ProblemSpec
        spec = ProblemSpec.for_graph(g, _PROBLEMS[args.problem],
                                     alpha=args.alpha, beta=args.beta)
        build_hierarchy(g, spec, stop_size=args.k_sub,
                        seed=args.seed).dump_json(args.dump_hierarchy)
    record = run_vcycle(
        g, _PROBLEMS[args.problem], args.k_sub, solver_cfg, args.seed,
        instance=args.graph, alpha=args.alpha, beta=args.beta, options=options)
    with open(args.out, "w") as fh:
        json.dump(_record_to_json(record), fh, indent=2)
    if record.failed:
        print(f"FAILED: {record.error}", file=sys.stderr)
        return 1
    summary = f"cut={record.cut:g} imbalance={record.imbalance:g}"
    if record.modularity is not None:
        summary += f" modularity={record.modularity:.6f}"
    print(f"{record.instance}: {summary} "
          f"(calls={record.total_solver_calls}, depth={record.hierarchy_depth})")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_sweep_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    records = run_sweep(cfg)
    write_csv(cfg, records, args.out)
    summary_path = args.summary or (args.out.rsplit(".", 1)[0] + "_summary.json")
    write_summary(cfg, records, summary_path)
    failed = sum(r.failed for r in records)
    print(f"{len(records)} runs ({failed} failed) -> {args.out}, {summary_path}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    try:
        n, blocks, p_in, p_out = args.planted.split(",")
        g = planted_partition(int(n), int(blocks), float(p_in), float(p_out),
                              args.seed)
    except ValueError as exc:
        print(f"bad --planted spec: {exc}", file=sys.stderr)
        return 2
    save_graph(g, args.out, args.format)
    print(f"wrote {args.out}: n={g.n}, edges={g.num_edges}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlqls",
        description="Multilevel sub-QUBO local search for graph partitioning "
                    "and 2-community modularity",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_solve_parser(sub)

    p_sweep = sub.add_parser("sweep", help="run a multi-seed sweep from TOML")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True, help="CSV output path")
    p_sweep.add_argument("--summary", default=None, help="JSON summary path")
    p_sweep.add_argument("--workers", type=int, default=None)

    p_gen = sub.add_parser("gen", help="generate a planted-partition graph")
    p_gen.add_argument("--planted", required=True, metavar="n,b,pin,pout")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--format", choices=["metis", "edgelist"],
                       default="metis")
    p_gen.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_gen(args)


if __name__ == "__main__":
    sys.exit(main())
