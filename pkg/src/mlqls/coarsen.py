"""Matching-based coarsening hierarchy and solution projection.

One coarsening round rates all edges with the expansion*2 metric
w(u,v)^2/(vol(u)*vol(v)), builds a matching with the Global Path Algorithm,
and contracts matched pairs. Rounds repeat until the graph is at most
``stop_size`` nodes or a round shrinks it by less than 5% (a stall, recorded
on the hierarchy). Contraction sums volumes and parallel edge weights and
drops the self-loops created by contracted edges, whose weight is a constant
offset for any spin assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graphs import WeightedGraph
from .objective import ProblemKind, ProblemSpec, update_weights_for_modularity

__all__ = [
    "Hierarchy",
    "rate_edges",
    "match",
    "matching_pairs",
    "contract",
    "build_hierarchy",
    "project",
]

STALL_FRACTION = 0.05


@dataclass
class Hierarchy:
    """Graphs from finest (index 0) to coarsest, plus the contraction maps.

    ``maps[i]`` sends a node of ``levels[i]`` to its image in ``levels[i+1]``.
    """

    levels: list[WeightedGraph]
    maps: list[np.ndarray] = field(default_factory=list)
    stalled: bool = False

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def coarsest(self) -> WeightedGraph:
        return self.levels[-1]

    def level_summaries(self) -> list[dict]:
        return [
            {
                "n": g.n,
                "m_level": g.total_edge_weight,
                "sum_volume": float(g.volume.sum()),
            }
            for g in self.levels
        ]

    def dump_json(self, path: str) -> None:
        with open(path, "w") as fh:
            for record in self.level_summaries():
                fh.write(json.dumps(record) + "\n")


def rate_edges(g: WeightedGraph) -> np.ndarray:
    """Expansion*2 rating per undirected edge, aligned with edge_arrays()."""
    u, v, w = g.edge_arrays()
    return (w * w) / (g.volume[u] * g.volume[v])


def _path_dp(ratings: list[float]) -> list[bool]:
    """Max-weight matching on a path; returns a take-flag per edge.

    Ties prefer skipping the later edge, so earlier (lower tie-rank) edges
    survive.
    """
    L = len(ratings)
    best = [0.0] * (L + 1)
    for i in range(1, L + 1):
        take = (best[i - 2] if i >= 2 else 0.0) + ratings[i - 1]
        best[i] = best[i - 1] if best[i - 1] >= take else take
    chosen = [False] * L
    i = L
    while i >= 1:
        if best[i] == best[i - 1]:
            i -= 1
        else:
            chosen[i - 1] = True
            i -= 2
    return chosen


def match(g: WeightedGraph, ratings: np.ndarray, seed: int | None = None) -> np.ndarray:
    """Global Path Algorithm matching; ``mate[i]`` is i's partner or -1.

    Edges are scanned in descending rating (ties: lower endpoint id, then
    lower other endpoint id) and enter the structure when both endpoints have
    structure-degree at most 1 and no odd cycle would close. Max-rating
    matchings are then extracted from the resulting paths and even cycles by
    dynamic programming. Fully deterministic; ``seed`` is accepted for
    interface symmetry with stochastic variants and unused.
    """
    eu, ev, _ = g.edge_arrays()
    n = g.n
    order = np.lexsort((ev, eu, -ratings))

    sdeg = np.zeros(n, dtype=np.int8)
    parent = np.arange(n)
    comp_nodes = np.ones(n, dtype=np.int64)
    # structure adjacency: at most two (neighbor, rating) entries per node
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for idx in order:
        u, v, r = int(eu[idx]), int(ev[idx]), float(ratings[idx])
        if sdeg[u] > 1 or sdeg[v] > 1:
            continue
        ru, rv = find(u), find(v)
        if ru == rv:
            if comp_nodes[ru] % 2 == 1:
                continue  # closing this edge would form an odd cycle
        else:
            parent[ru] = rv
            comp_nodes[rv] += comp_nodes[ru]
        sdeg[u] += 1
        sdeg[v] += 1
        adj[u].append((v, r))
        adj[v].append((u, r))

    mate = np.full(n, -1, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)

    def walk(start: int, nxt: int) -> tuple[list[int], list[float]]:
        nodes = [start]
        ratings_seq: list[float] = []
        visited[start] = True
        prev, cur = start, nxt
        r0 = next(r for nb, r in adj[start] if nb == nxt)
        ratings_seq.append(r0)
        while True:
            nodes.append(cur)
            if visited[cur]:
                break  # closed a cycle back to start
            visited[cur] = True
            following = [(nb, r) for nb, r in adj[cur] if nb != prev]
            if not following:
                break
            prev, cur = cur, following[0][0]
            ratings_seq.append(following[0][1])
        return nodes, ratings_seq

    def apply_dp(nodes: list[int], chosen: list[bool]) -> None:
        for i, take in enumerate(chosen):
            if take:
                a, b = nodes[i], nodes[i + 1]
                mate[a] = b
                mate[b] = a

    # paths first: start from the lowest-id endpoint of each
    for node in range(n):
        if sdeg[node] == 1 and not visited[node]:
            nodes, rseq = walk(node, adj[node][0][0])
            apply_dp(nodes, _path_dp(rseq))
    # even cycles: start at the lowest unvisited id, toward its lower neighbor
    for node in range(n):
        if sdeg[node] == 2 and not visited[node]:
            nbr = min(nb for nb, _ in adj[node])
            nodes, rseq = walk(node, nbr)
            # nodes[-1] == nodes[0]; rseq[-1] closes the cycle
            L = len(rseq)
            open_best = _path_dp(rseq[:-1])
            open_total = sum(r for r, t in zip(rseq[:-1], open_best) if t)
            inner = _path_dp(rseq[1:-2]) if L >= 4 else []
            forced_total = rseq[-1] + sum(
                r for r, t in zip(rseq[1:-2], inner) if t)
            if forced_total > open_total:
                chosen = [False] + inner + [False]
                apply_dp(nodes, chosen)
                a, b = nodes[-2], nodes[0]
                mate[a] = b
                mate[b] = a
            else:
                apply_dp(nodes, open_best + [False])
    return mate


def matching_pairs(mate: np.ndarray) -> set[tuple[int, int]]:
    """The matching as a set of (low, high) node pairs."""
    return {(int(i), int(mate[i])) for i in range(len(mate)) if 0 <= i < mate[i]}


def contract(g: WeightedGraph, mate: np.ndarray) -> tuple[WeightedGraph, np.ndarray]:
    """Collapse matched pairs into single coarse nodes.

    Coarse ids run in ascending order of each group's smallest fine id.
    Parallel edges are summed; edges inside a matched pair become self-loops
    and are dropped.
    """
    n = g.n
    is_rep = (mate < 0) | (mate > np.arange(n))
    coarse_of = np.full(n, -1, dtype=np.int64)
    coarse_of[is_rep] = np.arange(int(is_rep.sum()))
    partner = mate[~is_rep]
    coarse_of[~is_rep] = coarse_of[partner]
    nc = int(is_rep.sum())

    vol = np.zeros(nc, dtype=np.float64)
    np.add.at(vol, coarse_of, g.volume)

    # one canonical arc per surviving fine edge keeps the merged weights
    # bit-identical in both orientations
    cu = coarse_of[g.arc_src]
    cv = coarse_of[g.indices]
    keep = cu < cv
    coarse = WeightedGraph.from_edges(nc, cu[keep], cv[keep], g.weights[keep],
                                      volume=vol)
    return coarse, coarse_of


def build_hierarchy(
    g: WeightedGraph,
    problem: ProblemSpec,
    stop_size: int,
    seed: int | None = None,
) -> Hierarchy:
    """Coarsen until at most ``stop_size`` nodes remain or progress stalls.

    For modularity runs the finest level is first re-weighted so volumes
    carry the degrees upward; levels[0] is that re-weighted graph.
    """
    if stop_size < 2:
        raise ValueError("stop_size must be >= 2")
    g0 = g
    if problem.kind == ProblemKind.MODULARITY:
        g0 = update_weights_for_modularity(g)
    hierarchy = Hierarchy(levels=[g0])
    while hierarchy.coarsest.n > stop_size:
        cur = hierarchy.coarsest
        mate = match(cur, rate_edges(cur), seed)
        coarse, coarse_of = contract(cur, mate)
        if coarse.n >= cur.n:
            hierarchy.stalled = True
            break
        hierarchy.levels.append(coarse)
        hierarchy.maps.append(coarse_of)
        if cur.n - coarse.n < STALL_FRACTION * cur.n:
            if coarse.n > stop_size:
                hierarchy.stalled = True
            break
    return hierarchy


def project(coarse_solution: np.ndarray, coarse_of: np.ndarray) -> np.ndarray:
    """Spin of each fine node := spin of its coarse image."""
    coarse_solution = np.asarray(coarse_solution)
    if coarse_of.max(initial=-1) >= len(coarse_solution) or np.any(coarse_of < 0):
        raise ValueError("coarse assignment missing for some fine node")
    return coarse_solution[coarse_of]
