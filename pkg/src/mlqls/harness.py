"""The multilevel V-cycle: coarsen, solve the coarsest problem, then project
and refine level by level.

Refinement at one level repeats: compute all gains, take the highest-gain
nodes as the free set, build and solve the sub-QUBO, and accept the returned
assignment only if it strictly lowers the objective. The loop stops after
``patience`` consecutive non-improving solves. Solver failures count as
non-improving iterations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .coarsen import Hierarchy, build_hierarchy, project
from .graphs import WeightedGraph
from .objective import (
    PartitionState,
    ProblemKind,
    ProblemSpec,
    apply_flips,
    evaluate,
    gains,
)
from .solvers import ExternalSolverError, SolverConfig, make_solver
from .subqubo import build_subqubo, scale_for_precision, select_free

__all__ = ["VCycleOptions", "RunRecord", "random_solution", "refine_level",
           "run_vcycle"]

# strictness epsilon for "candidate improves": guards against accepting pure
# floating-point noise as progress
IMPROVE_RTOL = 1e-9


@dataclass(frozen=True)
class VCycleOptions:
    precision_mode: str = "none"  # none | separate | naive
    precision_levels: int | None = None
    patience: int | None = None  # None: 1 for exhaustive, 3 otherwise
    stochastic_selection: bool = False
    check_state: bool = False  # re-verify aggregates after every level


@dataclass
class RunRecord:
    """One V-cycle outcome; everything a sweep row or a replay needs."""

    instance: str
    problem: str
    k_sub: int
    solver: str
    seed: int
    n: int = 0
    hierarchy_depth: int = 0
    coarsest_direct: bool = False
    level_iterations: list[int] = field(default_factory=list)  # coarsest first
    total_solver_calls: int = 0
    cut: float = float("nan")
    modularity: float | None = None
    imbalance: float = float("nan")
    objective: float = float("nan")
    objective_trace: list[float] = field(default_factory=list)
    balanced: bool | None = None
    stalled_coarsening: bool = False
    wall_time_s: float = 0.0
    failed: bool = False
    error: str | None = None
    spins: np.ndarray | None = None


def random_solution(
    g: WeightedGraph, spec: ProblemSpec, rng: np.random.Generator
) -> PartitionState:
    """Uniform random spins, then greedy low-|gain| flips from the heavy side
    until the volume imbalance is below one max-volume unit."""
    spins = (rng.integers(0, 2, size=g.n) * 2 - 1).astype(np.int8)
    state = PartitionState.from_spins(g, spins)
    max_vol = float(g.volume.max())
    for _ in range(g.n):
        diff = state.vol_c1 - state.vol_c2
        if abs(diff) <= max_vol:
            break
        heavy_spin = -1 if diff > 0 else 1
        cand = np.flatnonzero(
            (state.spin == heavy_spin) & (g.volume < abs(diff)))
        if len(cand) == 0:
            break
        gv = gains(g, spec, state)
        pick = cand[np.lexsort((cand, np.abs(gv[cand])))[0]]
        apply_flips(g, spec, state, [int(pick)])
    return state


def refine_level(
    g: WeightedGraph,
    spec: ProblemSpec,
    state: PartitionState,
    solver,
    k_sub: int,
    patience: int = 1,
    rng: np.random.Generator | None = None,
    options: VCycleOptions = VCycleOptions(),
    trace: list[float] | None = None,
) -> tuple[PartitionState, int]:
    """Iterated sub-QUBO refinement of one level; returns the solver-call count.

    Acceptance compares candidate and current energies of the same unscaled
    sub-QUBO, so a restriction of the true objective decides, even when the
    solver saw a precision-scaled instance.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    iterations = 0
    bad = 0
    while bad < patience:
        gv = gains(g, spec, state)
        free = select_free(gv, k_sub, rng=rng,
                           stochastic=options.stochastic_selection)
        q = build_subqubo(g, spec, state, free)
        q_run = q
        if options.precision_mode != "none":
            q_run = scale_for_precision(q, options.precision_mode,
                                        options.precision_levels)
        iterations += 1
        try:
            result = solver(q_run, rng)
        except ExternalSolverError:
            bad += 1
            continue
        s_cur = state.spin[free]
        e_cur = q.energy(s_cur)
        e_new = q.energy(result.spins)
        if e_new < e_cur - IMPROVE_RTOL * max(1.0, abs(e_cur)):
            flips = free[result.spins != s_cur]
            apply_flips(g, spec, state, flips)
            if trace is not None:
                trace.append(evaluate(g, spec, state).penalized)
            bad = 0
        else:
            bad += 1
    return state, iterations


def _default_patience(cfg: SolverConfig) -> int:
    return 1 if cfg.deterministic else 3


def run_vcycle(
    g: WeightedGraph,
    kind: ProblemKind | str,
    k_sub: int,
    solver_cfg: SolverConfig,
    seed: int,
    instance: str = "",
    alpha: float | None = None,
    beta: float = 1.0,
    options: VCycleOptions = VCycleOptions(),
) -> RunRecord:
    """One full V-cycle; deterministic per (inputs, seed) up to wall time."""
    record = RunRecord(
        instance=instance or g.meta.get("path", "graph"),
        problem=ProblemKind(kind).value,
        k_sub=k_sub,
        solver=solver_cfg.name,
        seed=seed,
        n=g.n,
    )
    start = time.perf_counter()
    try:
        _run_vcycle_inner(g, kind, k_sub, solver_cfg, seed, alpha, beta,
                          options, record)
    except Exception as exc:  # noqa: BLE001 - sweep cells must not abort runs
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
    record.wall_time_s = time.perf_counter() - start
    return record


def _run_vcycle_inner(g, kind, k_sub, solver_cfg, seed, alpha, beta, options,
                      record: RunRecord) -> None:
    spec = ProblemSpec.for_graph(g, kind, alpha=alpha, beta=beta)
    solver = make_solver(solver_cfg)
    patience = options.patience or _default_patience(solver_cfg)
    rng = np.random.default_rng(seed)

    hierarchy: Hierarchy = build_hierarchy(g, spec, stop_size=k_sub, seed=seed)
    record.hierarchy_depth = hierarchy.depth
    record.stalled_coarsening = hierarchy.stalled

    coarsest = hierarchy.coarsest
    trace = record.objective_trace
    if coarsest.n <= k_sub:
        # the whole coarsest problem fits the solver: one direct solve
        record.coarsest_direct = True
        state = PartitionState.from_spins(
            coarsest, np.ones(coarsest.n, dtype=np.int8))
        q = build_subqubo(coarsest, spec, state,
                          np.arange(coarsest.n, dtype=np.int64))
        q_run = q
        if options.precision_mode != "none":
            q_run = scale_for_precision(q, options.precision_mode,
                                        options.precision_levels)
        result = solver(q_run, rng)
        flips = np.flatnonzero(result.spins != state.spin)
        apply_flips(coarsest, spec, state, flips)
        trace.append(evaluate(coarsest, spec, state).penalized)
    else:
        state = random_solution(coarsest, spec, rng)
        trace.append(evaluate(coarsest, spec, state).penalized)
        state, its = refine_level(coarsest, spec, state, solver, k_sub,
                                  patience, rng, options, trace)
        record.level_iterations.append(its)

    for li in range(hierarchy.depth - 2, -1, -1):
        fine = hierarchy.levels[li]
        spins = project(state.spin, hierarchy.maps[li])
        state = PartitionState.from_spins(fine, spins)
        state, its = refine_level(fine, spec, state, solver, k_sub,
                                  patience, rng, options, trace)
        record.level_iterations.append(its)
        if options.check_state:
            state.check_consistent(fine)

    record.total_solver_calls = sum(record.level_iterations) + (
        1 if record.coarsest_direct else 0)
    finest = hierarchy.levels[0]
    ev = evaluate(finest, spec, state)
    record.cut = ev.cut
    record.modularity = ev.modularity
    record.imbalance = ev.imbalance
    record.objective = ev.penalized
    if spec.kind == ProblemKind.GP:
        record.balanced = bool(ev.imbalance <= float(finest.volume.max()))
    record.spins = state.spin.copy()
