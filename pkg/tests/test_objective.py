import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlqls.graphs import WeightedGraph
from mlqls.objective import (
    PartitionState,
    ProblemKind,
    ProblemSpec,
    apply_flips,
    default_gp_alpha,
    evaluate,
    gains,
    update_weights_for_modularity,
)

from conftest import er_graph, random_instance, random_spins
from oracles import dense_matrix, flip_deltas_dense, objective_dense


def mod_spec(g):
    return ProblemSpec.modularity(g.total_edge_weight)


def gp_spec(g, alpha=None, beta=1.0):
    return ProblemSpec.graph_partitioning(
        g.total_edge_weight, alpha=alpha or default_gp_alpha(g), beta=beta)


class TestProblemSpec:
    def test_modularity_constants_forced(self):
        spec = ProblemSpec.modularity(6.0)
        assert spec.beta == 1.0 and spec.alpha == 1.0 / 12.0
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.MODULARITY, alpha=0.3, beta=1.0, m=6.0)

    def test_positivity(self):
        with pytest.raises(ValueError):
            ProblemSpec(ProblemKind.GP, alpha=-1.0, beta=1.0, m=3.0)


class TestUpdateWeights:
    def test_p4(self, p4):
        g = update_weights_for_modularity(p4)
        assert list(g.volume) == [1, 2, 2, 1]
        assert g.volume.sum() == 2 * p4.total_edge_weight

    def test_k4(self, k4):
        g = update_weights_for_modularity(k4)
        assert np.all(g.volume == 3.0)
        assert g.volume.sum() == 12.0

    def test_weighted_path(self):
        g = WeightedGraph.from_edges(3, [0, 1], [1, 2], [2.5, 1.0])
        assert list(update_weights_for_modularity(g).volume) == [2.5, 3.5, 1.0]


class TestEvaluate:
    def test_all_equal_modularity_zero(self, rng):
        g = random_instance(rng, 60)
        gm = update_weights_for_modularity(g)
        state = PartitionState.from_spins(gm, np.ones(g.n, dtype=np.int8))
        ev = evaluate(gm, mod_spec(g), state)
        assert ev.cut == 0.0
        assert ev.modularity == 0.0

    def test_p4_split(self, p4):
        gm = update_weights_for_modularity(p4)
        state = PartitionState.from_spins(gm, np.array([-1, -1, 1, 1]))
        ev = evaluate(gm, mod_spec(p4), state)
        assert ev.cut == 1.0
        assert state.deg_c1 == state.deg_c2 == 3.0
        assert ev.modularity == pytest.approx(1 / 6, rel=1e-12)

    def test_k4_split(self, k4):
        gm = update_weights_for_modularity(k4)
        state = PartitionState.from_spins(gm, np.array([-1, -1, 1, 1]))
        ev = evaluate(gm, mod_spec(k4), state)
        assert ev.cut == 4.0
        assert ev.modularity == pytest.approx(-1 / 6, rel=1e-12)

    def test_matches_dense_quadratic_form(self, rng):
        for _ in range(20):
            g = random_instance(rng, 100)
            for spec, geval in ((mod_spec(g), update_weights_for_modularity(g)),
                                (gp_spec(g), g)):
                spins = random_spins(rng, g.n)
                state = PartitionState.from_spins(geval, spins)
                ev = evaluate(geval, spec, state)
                want = objective_dense(geval, spec, spins)
                assert ev.penalized == pytest.approx(want, rel=1e-9, abs=1e-9)

    def test_quadratic_form_identities(self, rng):
        # s^T vv^T s == (Vol(C1)-Vol(C2))^2 and s^T A s == 2(m - 2 cut)
        for _ in range(10):
            g = random_instance(rng, 100)
            spins = random_spins(rng, g.n)
            s = spins.astype(float)
            state = PartitionState.from_spins(g, spins)
            vvt = np.outer(g.volume, g.volume)
            assert s @ vvt @ s == pytest.approx(
                (state.vol_c1 - state.vol_c2) ** 2, rel=1e-9)
            A = np.zeros((g.n, g.n))
            A[g.arc_src, g.indices] = g.weights
            assert s @ A @ s == pytest.approx(
                2 * (g.total_edge_weight - 2 * state.cut), rel=1e-9, abs=1e-9)

    def test_modularity_bound(self, rng):
        for _ in range(30):
            g = random_instance(rng, 80)
            gm = update_weights_for_modularity(g)
            state = PartitionState.from_spins(gm, random_spins(rng, g.n))
            assert evaluate(gm, mod_spec(g), state).modularity <= 0.5

    def test_global_flip_symmetry(self, rng):
        g = random_instance(rng, 80)
        spec = gp_spec(g)
        spins = random_spins(rng, g.n)
        a = evaluate(g, spec, PartitionState.from_spins(g, spins)).penalized
        b = evaluate(g, spec, PartitionState.from_spins(g, -spins)).penalized
        assert a == pytest.approx(b, rel=1e-12)


class TestGains:
    def test_p4_modularity_node1(self, p4):
        gm = update_weights_for_modularity(p4)
        spec = mod_spec(p4)
        state = PartitionState.from_spins(gm, np.array([-1, -1, 1, 1]))
        gv = gains(gm, spec, state)
        assert gv[1] == pytest.approx(-4 / 3, rel=1e-12)
        before = evaluate(gm, spec, state).penalized
        apply_flips(gm, spec, state, [1])
        after = evaluate(gm, spec, state).penalized
        assert after - before == pytest.approx(8 / 3, rel=1e-12)
        assert after - before == pytest.approx(-2 * gv[1], rel=1e-12)

    def test_two_disjoint_edges_gp(self):
        # balanced split with each node beside its partner: g = -2 alpha - 2w
        g = WeightedGraph.from_edges(4, [0, 2], [1, 3], [1, 1])
        alpha = 0.375
        spec = gp_spec(g, alpha=alpha)
        state = PartitionState.from_spins(g, np.array([-1, -1, 1, 1]))
        gv = gains(g, spec, state)
        assert np.allclose(gv, -2 * alpha - 2.0)

    def test_symmetric_orbit(self, k4):
        spec = gp_spec(k4)
        state = PartitionState.from_spins(k4, np.array([-1, -1, 1, 1]))
        gv = gains(k4, spec, state)
        assert len(set(np.round(gv, 12))) == 1  # all nodes equivalent

    def test_oracle_equivalence(self, rng):
        # flip delta == -2 * gain, against the dense-matrix oracle
        for _ in range(15):
            g = random_instance(rng, 120)
            for spec, geval in ((mod_spec(g), update_weights_for_modularity(g)),
                                (gp_spec(g), g)):
                M = dense_matrix(geval, spec)
                for _ in range(5):
                    spins = random_spins(rng, g.n)
                    state = PartitionState.from_spins(geval, spins)
                    gv = gains(geval, spec, state)
                    deltas = flip_deltas_dense(M, spins)
                    assert np.allclose(deltas, -2 * gv, rtol=1e-9, atol=1e-9)

    def test_flip_delta_oracle_is_literal(self, rng):
        # sanity-check the vectorized oracle against re-evaluating s^T M s
        g = er_graph(rng, 20, 0.3, weighted=True)
        spec = gp_spec(g)
        M = dense_matrix(g, spec)
        spins = random_spins(rng, g.n)
        deltas = flip_deltas_dense(M, spins)
        for i in range(g.n):
            flipped = spins.copy()
            flipped[i] = -flipped[i]
            literal = objective_dense(g, spec, flipped) - objective_dense(
                g, spec, spins)
            assert deltas[i] == pytest.approx(literal, rel=1e-9, abs=1e-9)


class TestApplyFlips:
    def test_involution(self, rng):
        g = random_instance(rng, 60)
        spec = gp_spec(g)
        spins = random_spins(rng, g.n)
        state = PartitionState.from_spins(g, spins)
        ref = state.copy()
        nodes = rng.choice(g.n, size=min(7, g.n), replace=False)
        apply_flips(g, spec, state, nodes)
        apply_flips(g, spec, state, nodes[::-1])
        assert np.array_equal(state.spin, ref.spin)
        assert state.cut == ref.cut
        assert state.vol_c1 == ref.vol_c1 and state.deg_c2 == ref.deg_c2

    def test_flip_all(self, rng):
        g = random_instance(rng, 50)
        spec = gp_spec(g)
        state = PartitionState.from_spins(g, random_spins(rng, g.n))
        cut0, v1, v2 = state.cut, state.vol_c1, state.vol_c2
        apply_flips(g, spec, state, np.arange(g.n))
        assert state.cut == pytest.approx(cut0, abs=1e-9)
        assert state.vol_c1 == pytest.approx(v2)
        assert state.vol_c2 == pytest.approx(v1)

    def test_duplicate_rejected(self, p4):
        spec = gp_spec(p4)
        state = PartitionState.from_spins(p4, np.array([1, 1, -1, -1]))
        with pytest.raises(ValueError, match="duplicate"):
            apply_flips(p4, spec, state, [2, 2])

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_matches_recomputation(self, seed):
        local = np.random.default_rng(seed)
        g = er_graph(local, 50, 0.15, weighted=True)
        spec = gp_spec(g)
        state = PartitionState.from_spins(g, random_spins(local, g.n))
        for _ in range(20):
            node = int(local.integers(g.n))
            apply_flips(g, spec, state, [node])
        state.check_consistent(g)


def test_gain_is_o_deg_shape(rng):
    # gains returns one value per node and ignores isolated-node adjacency
    g = WeightedGraph.from_edges(5, [0, 1], [1, 2], [1.0, 2.0])
    spec = gp_spec(g)
    state = PartitionState.from_spins(g, np.array([1, -1, 1, -1, 1]))
    gv = gains(g, spec, state)
    assert gv.shape == (5,)
    assert math.isfinite(gv[4])
