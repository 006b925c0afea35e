import numpy as np
import pytest

from mlqls.graphs import WeightedGraph, planted_partition
from mlqls.harness import (
    VCycleOptions,
    random_solution,
    refine_level,
    run_vcycle,
)
from mlqls.objective import (
    PartitionState,
    ProblemSpec,
    default_gp_alpha,
    evaluate,
    update_weights_for_modularity,
)
from mlqls.solvers import SAParams, SolverConfig, make_solver

from conftest import er_graph, random_spins
from oracles import enumerate_min, dense_matrix

EXH = SolverConfig("exhaustive")


class TestRandomSolution:
    def test_balanced_within_one_unit(self, rng):
        g = er_graph(rng, 101, 0.05)
        spec = ProblemSpec.graph_partitioning(
            g.total_edge_weight, alpha=default_gp_alpha(g))
        state = random_solution(g, spec, rng)
        assert abs(state.vol_c1 - state.vol_c2) <= g.volume.max()
        state.check_consistent(g)

    def test_deterministic_per_rng_seed(self, rng):
        g = er_graph(rng, 60, 0.1)
        spec = ProblemSpec.graph_partitioning(g.total_edge_weight, alpha=1.0)
        a = random_solution(g, spec, np.random.default_rng(5))
        b = random_solution(g, spec, np.random.default_rng(5))
        assert np.array_equal(a.spin, b.spin)


class TestRefineLevel:
    def test_fixed_point_one_iteration(self, p4):
        # start at the global optimum: one non-improving solve, no change
        gm = update_weights_for_modularity(p4)
        spec = ProblemSpec.modularity(p4.total_edge_weight)
        state = PartitionState.from_spins(gm, np.array([-1, -1, 1, 1]))
        solver = make_solver(EXH)
        state, iters = refine_level(gm, spec, state, solver, k_sub=4)
        assert iters == 1
        assert evaluate(gm, spec, state).modularity == pytest.approx(1 / 6)

    def test_p4_converges_to_global_optimum(self, p4):
        gm = update_weights_for_modularity(p4)
        spec = ProblemSpec.modularity(p4.total_edge_weight)
        solver = make_solver(EXH)
        # brute-force the optimum over all 2^4 partitions via the dense form
        M = dense_matrix(gm, spec)
        best_pen, _ = enumerate_min(
            np.triu(M, 1) + np.triu(M, 1).T, np.zeros(4),
            float(np.trace(M)))
        assert best_pen == pytest.approx(-2.0)  # modularity 1/6
        for start in ([1, 1, 1, 1], [-1, 1, -1, 1], [1, -1, -1, 1]):
            state = PartitionState.from_spins(gm, np.array(start))
            state, _ = refine_level(gm, spec, state, solver, k_sub=4)
            assert evaluate(gm, spec, state).penalized == pytest.approx(
                best_pen, rel=1e-9)

    def test_trace_strictly_decreasing(self, rng):
        g = er_graph(rng, 80, 0.08)
        spec = ProblemSpec.graph_partitioning(
            g.total_edge_weight, alpha=default_gp_alpha(g))
        state = PartitionState.from_spins(g, random_spins(rng, g.n))
        trace = [evaluate(g, spec, state).penalized]
        refine_level(g, spec, state, make_solver(EXH), k_sub=10, rng=rng,
                     trace=trace)
        assert all(b < a for a, b in zip(trace, trace[1:]))
        assert len(trace) > 1  # a random start on 80 nodes must improve

    def test_solver_errors_count_as_non_improving(self, rng, p4):
        spec = ProblemSpec.graph_partitioning(3.0, alpha=1.0)
        state = PartitionState.from_spins(p4, np.array([1, -1, 1, -1]))
        cfg = SolverConfig("external", external_cmd="false",
                           external_timeout=5)
        state, iters = refine_level(p4, spec, state, make_solver(cfg),
                                    k_sub=2, patience=3)
        assert iters == 3  # three failed solves, then give up


class TestRunVcycle:
    def test_degenerate_whole_graph_solve(self, rng):
        g = er_graph(rng, 8, 0.5)
        rec = run_vcycle(g, "gp", 10, EXH, seed=0, instance="tiny")
        assert not rec.failed
        assert rec.hierarchy_depth == 1
        assert rec.coarsest_direct
        assert rec.total_solver_calls == 1
        # the one direct solve is exact for the penalized objective
        spec = ProblemSpec.for_graph(g, "gp")
        M = dense_matrix(g, spec)
        want, _ = enumerate_min(np.triu(M, 1) + np.triu(M, 1).T,
                                np.zeros(g.n), float(np.trace(M)))
        assert rec.objective == pytest.approx(want, rel=1e-9)

    def test_deterministic_same_seed(self, rng):
        g = planted_partition(240, 2, 0.08, 0.005, seed=3)
        a = run_vcycle(g, "modularity", 12, EXH, seed=7, instance="pp")
        b = run_vcycle(g, "modularity", 12, EXH, seed=7, instance="pp")
        assert a.modularity == b.modularity
        assert a.total_solver_calls == b.total_solver_calls
        assert a.level_iterations == b.level_iterations
        assert np.array_equal(a.spins, b.spins)
        assert a.objective_trace == b.objective_trace

    def test_record_matches_recomputation(self, rng):
        g = planted_partition(200, 2, 0.1, 0.01, seed=5)
        rec = run_vcycle(g, "modularity", 10, EXH, seed=1, instance="pp")
        assert not rec.failed
        gm = update_weights_for_modularity(g)
        spec = ProblemSpec.modularity(g.total_edge_weight)
        state = PartitionState.from_spins(gm, rec.spins)
        ev = evaluate(gm, spec, state)
        assert rec.cut == pytest.approx(ev.cut, abs=1e-9)
        assert rec.modularity == pytest.approx(ev.modularity, rel=1e-12)
        assert rec.imbalance == pytest.approx(ev.imbalance, abs=1e-9)

    def test_call_accounting(self, rng):
        g = planted_partition(200, 2, 0.1, 0.01, seed=2)
        rec = run_vcycle(g, "gp", 10, EXH, seed=0)
        assert rec.total_solver_calls == sum(rec.level_iterations) + int(
            rec.coarsest_direct)
        assert len(rec.level_iterations) >= rec.hierarchy_depth - 1

    def test_trace_monotone_across_levels(self, rng):
        g = planted_partition(300, 2, 0.06, 0.004, seed=8)
        rec = run_vcycle(g, "modularity", 12, EXH, seed=3)
        t = rec.objective_trace
        assert len(t) >= 1
        assert all(b < a for a, b in zip(t, t[1:]))

    def test_refinement_never_worse_than_projection(self, rng):
        # final finest objective <= first trace entry (initial coarse value)
        g = planted_partition(300, 3, 0.09, 0.006, seed=4)
        rec = run_vcycle(g, "modularity", 12, EXH, seed=5)
        assert rec.objective <= rec.objective_trace[0] + 1e-9

    def test_sa_solver_runs(self, rng):
        g = planted_partition(120, 2, 0.12, 0.01, seed=6)
        cfg = SolverConfig("sa", sa=SAParams(num_samples=30, sweeps=15))
        rec = run_vcycle(g, "modularity", 16, cfg, seed=2)
        assert not rec.failed
        assert rec.modularity is not None
        assert rec.modularity <= 0.5

    def test_gp_balance_flag(self, rng):
        g = planted_partition(200, 2, 0.1, 0.01, seed=9)
        rec = run_vcycle(g, "gp", 12, EXH, seed=4)
        assert rec.balanced is not None
        assert rec.balanced == (rec.imbalance <= 1.0)

    def test_failure_is_flagged_not_raised(self, rng):
        g = er_graph(rng, 50, 0.1)
        cfg = SolverConfig("exhaustive", exhaustive_cap=4)
        rec = run_vcycle(g, "gp", 12, cfg, seed=0)
        assert rec.failed
        assert "cap" in rec.error

    def test_stalled_coarsening_uses_random_init(self):
        # star graph stalls above k_sub; the coarsest level is then refined
        # from a random balanced-ish start instead of solved directly
        n = 100
        g = WeightedGraph.from_edges(
            n, np.zeros(n - 1, dtype=int), np.arange(1, n), np.ones(n - 1))
        rec = run_vcycle(g, "gp", 10, EXH, seed=0, instance="star")
        assert not rec.failed, rec.error
        assert rec.stalled_coarsening
        assert not rec.coarsest_direct
        assert rec.total_solver_calls == sum(rec.level_iterations)

    def test_precision_modes_still_converge(self, rng):
        g = planted_partition(120, 2, 0.15, 0.01, seed=10)
        base = run_vcycle(g, "modularity", 12, EXH, seed=1)
        for mode, levels in (("naive", 257), ("separate", 257)):
            opts = VCycleOptions(precision_mode=mode, precision_levels=levels)
            rec = run_vcycle(g, "modularity", 12, EXH, seed=1, options=opts)
            assert not rec.failed
            # quantized solves still only accept true improvements
            t = rec.objective_trace
            assert all(b < a for a, b in zip(t, t[1:]))
            assert rec.modularity >= 0.5 * base.modularity
