"""Multilevel sub-QUBO local search for graph partitioning and 2-community
modularity maximization."""

from .coarsen import Hierarchy, build_hierarchy, contract, match, project, rate_edges
from .graphs import (
    GraphFormatError,
    WeightedGraph,
    bfs_truncate,
    load_graph,
    planted_partition,
    save_graph,
)
from .harness import RunRecord, VCycleOptions, random_solution, refine_level, run_vcycle
from .objective import (
    Evaluation,
    PartitionState,
    ProblemKind,
    ProblemSpec,
    apply_flips,
    evaluate,
    gains,
    update_weights_for_modularity,
)
from .solvers import (
    ExternalSolverError,
    SAParams,
    SolveResult,
    SolverConfig,
    solve_exhaustive,
    solve_external,
    solve_sa,
)
from .subqubo import SubQubo, build_subqubo, scale_for_precision, select_free

__version__ = "0.1.0"

__all__ = [
    "GraphFormatError",
    "WeightedGraph",
    "load_graph",
    "save_graph",
    "bfs_truncate",
    "planted_partition",
    "Hierarchy",
    "rate_edges",
    "match",
    "contract",
    "build_hierarchy",
    "project",
    "ProblemKind",
    "ProblemSpec",
    "PartitionState",
    "Evaluation",
    "update_weights_for_modularity",
    "evaluate",
    "gains",
    "apply_flips",
    "SubQubo",
    "select_free",
    "build_subqubo",
    "scale_for_precision",
    "SolveResult",
    "SAParams",
    "SolverConfig",
    "ExternalSolverError",
    "solve_exhaustive",
    "solve_sa",
    "solve_external",
    "RunRecord",
    "VCycleOptions",
    "random_solution",
    "refine_level",
    "run_vcycle",
]
