"""Sparse weighted graph container, file I/O, and instance generation.

Graphs are undirected, stored in CSR form with every edge appearing as two
arcs. No self-loops are kept (they only add a constant to spin objectives),
all edge weights and node volumes are strictly positive, and instances are
immutable once built so they can be shared across parallel runs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GraphFormatError",
    "WeightedGraph",
    "load_graph",
    "save_graph",
    "bfs_truncate",
    "planted_partition",
]


class GraphFormatError(ValueError):
    """Raised for unreadable or inconsistent graph files.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


def _csr_from_arcs(
    n: int,
    src: np.ndarray,
    dst: np.ndarray,
    w: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Build sorted CSR arrays from directed arcs, summing duplicate arcs.

    Callers must supply both orientations of every undirected edge and no
    self-loops. Returns (indptr, indices, weights, n_duplicate_arcs).
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    if len(src):
        new = np.empty(len(src), dtype=bool)
        new[0] = True
        new[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
        group = np.cumsum(new) - 1
        n_dup = len(src) - int(new.sum())
        keep = np.flatnonzero(new)
        merged_w = np.bincount(group, weights=w, minlength=len(keep))
        src, dst, w = src[keep], dst[keep], merged_w
    else:
        n_dup = 0
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst, w, n_dup


@dataclass(eq=False)
class WeightedGraph:
    """Undirected weighted graph in CSR form with per-node volumes.

    ``indices[indptr[i]:indptr[i+1]]`` are the neighbors of node ``i`` in
    ascending order, ``weights`` the matching edge weights. ``volume`` holds
    the node volumes (all ones for plain instances, weighted degrees after
    the modularity reweighting) and ``weighted_degree[i]`` is the sum of
    weights incident to ``i``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    volume: np.ndarray
    weighted_degree: np.ndarray
    total_edge_weight: float
    arc_src: np.ndarray = field(repr=False, default=None)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arc_src is None:
            self.arc_src = np.repeat(
                np.arange(self.n, dtype=np.int64), np.diff(self.indptr)
            )
        for arr in (self.indptr, self.indices, self.weights, self.volume,
                    self.weighted_degree, self.arc_src):
            arr.flags.writeable = False

    @classmethod
    def from_arcs(
        cls,
        n: int,
        src: np.ndarray,
        dst: np.ndarray,
        w: np.ndarray,
        volume: np.ndarray | None = None,
        meta: dict | None = None,
    ) -> "WeightedGraph":
        """Construct from directed arcs (both orientations, no self-loops)."""
        indptr, indices, weights, _ = _csr_from_arcs(n, src, dst, w)
        deg = np.bincount(
            np.repeat(np.arange(n), np.diff(indptr)), weights=weights,
            minlength=n)
        vol = np.ones(n, dtype=np.float64) if volume is None else np.asarray(
            volume, dtype=np.float64).copy()
        if np.any(vol <= 0):
            raise ValueError("node volumes must be positive")
        return cls(
            n=n,
            indptr=indptr,
            indices=indices,
            weights=weights,
            volume=vol,
            weighted_degree=deg,
            total_edge_weight=float(weights.sum()) / 2.0,
            meta=meta or {},
        )

    @classmethod
    def from_edges(
        cls,
        n: int,
        u: np.ndarray,
        v: np.ndarray,
        w: np.ndarray,
        volume: np.ndarray | None = None,
    ) -> "WeightedGraph":
        """Construct from undirected edges given once each (u != v)."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        return cls.from_arcs(n, src, dst, np.concatenate([w, w]), volume=volume)

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor ids and edge weights of node ``i`` (read-only views)."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degrees(self) -> np.ndarray:
        """Unweighted degree sequence."""
        return np.diff(self.indptr)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """One row per undirected edge: (u, v, w) with u < v."""
        mask = self.arc_src < self.indices
        return self.arc_src[mask], self.indices[mask], self.weights[mask]

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def identical_to(self, other: "WeightedGraph") -> bool:
        """Structural equality: same CSR arrays, volumes, and degrees."""
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.volume, other.volume)
            and np.array_equal(self.weighted_degree, other.weighted_degree)
            and self.total_edge_weight == other.total_edge_weight
        )

    def check_invariants(self) -> None:
        """Recompute degrees/total weight from adjacency and verify fields."""
        if np.any(self.weights <= 0):
            raise AssertionError("nonpositive edge weight stored")
        if np.any(self.volume <= 0):
            raise AssertionError("nonpositive node volume stored")
        if np.any(self.arc_src == self.indices):
            raise AssertionError("self-loop stored")
        deg = np.bincount(self.arc_src, weights=self.weights, minlength=self.n)
        if not np.array_equal(deg, self.weighted_degree):
            raise AssertionError("weighted_degree inconsistent with adjacency")
        if self.total_edge_weight != float(self.weights.sum()) / 2.0:
            raise AssertionError("total_edge_weight inconsistent with adjacency")
        # symmetry: the transposed arc list must be the same arc list
        order = np.lexsort((self.arc_src, self.indices))
        if not (
            np.array_equal(self.indices[order], self.arc_src)
            and np.array_equal(self.arc_src[order], self.indices)
            and np.array_equal(self.weights[order], self.weights)
        ):
            raise AssertionError("adjacency not symmetric")


def _strip_comment(line: str) -> str:
    for marker in ("%", "#"):
        pos = line.find(marker)
        if pos >= 0:
            line = line[:pos]
    return line.strip()


def _load_metis(path: str) -> WeightedGraph:
    with open(path) as fh:
        raw_lines = fh.readlines()

    header = None
    header_lineno = 0
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(raw_lines, start=1):
        text = _strip_comment(raw)
        if not text:
            continue
        if header is None:
            header = text
            header_lineno = lineno
        else:
            body.append((lineno, text))

    if header is None:
        raise GraphFormatError("empty file, no header", path, 1)
    parts = header.split()
    if len(parts) not in (2, 3):
        raise GraphFormatError(f"header must be 'n m [fmt]', got {header!r}",
                               path, header_lineno)
    try:
        n, m = int(parts[0]), int(parts[1])
        fmt = int(parts[2]) if len(parts) == 3 else 0
    except ValueError as exc:
        raise GraphFormatError(f"unreadable header: {exc}", path, header_lineno)
    if fmt not in (0, 1, 10, 11):
        raise GraphFormatError(f"unsupported fmt {fmt}", path, header_lineno)
    has_ew = fmt in (1, 11)
    has_nw = fmt in (10, 11)

    if len(body) < n:
        raise GraphFormatError(f"expected {n} node lines, found {len(body)}",
                               path, header_lineno)
    if len(body) > n:
        warnings.warn(f"{path}: {len(body) - n} trailing non-empty lines ignored")

    src: list[int] = []
    dst: list[int] = []
    wts: list[float] = []
    vol = np.ones(n, dtype=np.float64)
    node_line = np.zeros(n, dtype=np.int64)
    entry_count = 0
    selfloops = 0
    for i in range(n):
        lineno, text = body[i]
        node_line[i] = lineno
        tokens = text.split()
        pos = 0
        if has_nw:
            if not tokens:
                raise GraphFormatError("missing node weight", path, lineno)
            try:
                vol[i] = float(tokens[0])
            except ValueError:
                raise GraphFormatError(f"bad node weight {tokens[0]!r}", path, lineno)
            if vol[i] <= 0:
                raise GraphFormatError(f"nonpositive node weight {vol[i]}", path, lineno)
            pos = 1
        step = 2 if has_ew else 1
        if (len(tokens) - pos) % step != 0:
            raise GraphFormatError("dangling token in adjacency list", path, lineno)
        for j in range(pos, len(tokens), step):
            try:
                nb = int(tokens[j])
            except ValueError:
                raise GraphFormatError(f"bad neighbor id {tokens[j]!r}", path, lineno)
            if not (1 <= nb <= n):
                raise GraphFormatError(f"node index {nb} out of range 1..{n}",
                                       path, lineno)
            w = 1.0
            if has_ew:
                try:
                    w = float(tokens[j + 1])
                except ValueError:
                    raise GraphFormatError(f"bad edge weight {tokens[j + 1]!r}",
                                           path, lineno)
                if w <= 0:
                    raise GraphFormatError(f"nonpositive edge weight {w}", path, lineno)
            entry_count += 1
            if nb - 1 == i:
                selfloops += 1
                continue
            src.append(i)
            dst.append(nb - 1)
            wts.append(w)

    if selfloops:
        warnings.warn(f"{path}: dropped {selfloops} self-loop entries")
    if entry_count != 2 * m:
        warnings.warn(
            f"{path}: header claims {m} edges but lists {entry_count} adjacency "
            f"entries (expected {2 * m})"
        )

    indptr, indices, weights, n_dup = _csr_from_arcs(
        n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
        np.array(wts, dtype=np.float64))
    if n_dup:
        warnings.warn(f"{path}: {n_dup} duplicate adjacency entries summed")

    _check_symmetry(indptr, indices, weights, node_line, path)
    g = WeightedGraph(
        n=n, indptr=indptr, indices=indices, weights=weights, volume=vol,
        weighted_degree=np.bincount(
            np.repeat(np.arange(n), np.diff(indptr)), weights=weights, minlength=n),
        total_edge_weight=float(weights.sum()) / 2.0,
        meta={"path": path, "format": "metis"},
    )
    return g


def _check_symmetry(indptr, indices, weights, node_line, path):
    src = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    order = np.lexsort((src, indices))
    ok = (
        np.array_equal(indices[order], src)
        and np.array_equal(src[order], indices)
        and np.array_equal(weights[order], weights)
    )
    if ok:
        return
    # locate the first node whose arc list disagrees with the transpose
    t_src, t_dst, t_w = indices[order], src[order], weights[order]
    for i in range(len(indptr) - 1):
        lo, hi = indptr[i], indptr[i + 1]
        if not (np.array_equal(t_src[lo:hi], src[lo:hi])
                and np.array_equal(t_dst[lo:hi], indices[lo:hi])
                and np.array_equal(t_w[lo:hi], weights[lo:hi])):
            raise GraphFormatError(
                f"asymmetric adjacency at node {i + 1}", path, int(node_line[i]))
    raise GraphFormatError("asymmetric adjacency", path, None)


def _load_edgelist(path: str) -> WeightedGraph:
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    selfloops = 0
    max_id = -1
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = _strip_comment(raw)
            if not text:
                continue
            tokens = text.split()
            if len(tokens) not in (2, 3):
                raise GraphFormatError(
                    f"expected 'u v [w]', got {len(tokens)} tokens", path, lineno)
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise GraphFormatError("bad node id", path, lineno)
            if u < 0 or v < 0:
                raise GraphFormatError("node index out of range (negative)",
                                       path, lineno)
            w = 1.0
            if len(tokens) == 3:
                try:
                    w = float(tokens[2])
                except ValueError:
                    raise GraphFormatError(f"bad edge weight {tokens[2]!r}",
                                           path, lineno)
            if w <= 0:
                raise GraphFormatError(f"nonpositive edge weight {w}", path, lineno)
            max_id = max(max_id, u, v)
            if u == v:
                selfloops += 1
                continue
            us.append(u)
            vs.append(v)
            ws.append(w)
    if selfloops:
        warnings.warn(f"{path}: dropped {selfloops} self-loops")
    n = max_id + 1
    if n <= 0:
        raise GraphFormatError("no edges found", path, 1)
    u = np.array(us, dtype=np.int64)
    v = np.array(vs, dtype=np.int64)
    w = np.array(ws, dtype=np.float64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    n_dup = len(lo) - len({(a, b) for a, b in zip(lo, hi)})
    if n_dup:
        warnings.warn(f"{path}: {n_dup} duplicate edges summed")
    g = WeightedGraph.from_edges(n, lo, hi, w)
    g.meta.update({"path": path, "format": "edgelist"})
    return g


def load_graph(path: str, format: str = "metis") -> WeightedGraph:
    """Load a graph file. Unweighted inputs get unit edge weights and volumes."""
    if format == "metis":
        return _load_metis(path)
    if format == "edgelist":
        return _load_edgelist(path)
    raise ValueError(f"unknown format {format!r} (expected 'metis' or 'edgelist')")


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def save_graph(g: WeightedGraph, path: str, format: str = "metis") -> None:
    """Write a graph in METIS or edge-list format (round-trips exactly)."""
    if format == "metis":
        has_ew = bool(np.any(g.weights != 1.0))
        has_nw = bool(np.any(g.volume != 1.0))
        fmt = (10 if has_nw else 0) + (1 if has_ew else 0)
        with open(path, "w") as fh:
            fh.write(f"{g.n} {g.num_edges}" + (f" {fmt:02d}" if fmt else "") + "\n")
            for i in range(g.n):
                parts = []
                if has_nw:
                    parts.append(_fmt_num(g.volume[i]))
                nbs, ws = g.neighbors(i)
                for nb, w in zip(nbs, ws):
                    parts.append(str(int(nb) + 1))
                    if has_ew:
                        parts.append(_fmt_num(w))
                fh.write(" ".join(parts) + "\n")
    elif format == "edgelist":
        u, v, w = g.edge_arrays()
        with open(path, "w") as fh:
            for a, b, x in zip(u, v, w):
                fh.write(f"{a} {b} {_fmt_num(x)}\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def median_degree_node(g: WeightedGraph) -> int:
    """Lowest node id whose unweighted degree is the median of the sequence."""
    deg = g.degrees()
    median = np.sort(deg)[g.n // 2]
    return int(np.flatnonzero(deg == median)[0])


def bfs_truncate(g: WeightedGraph, target_n: int) -> WeightedGraph:
    """Induced subgraph on the first ``target_n`` nodes found by BFS.

    The search starts from the lowest-id median-degree node, uses a FIFO
    frontier with neighbors visited in ascending id, and restarts from the
    next-lowest unvisited id if the component is exhausted early (the number
    of restarts lands in ``meta['bfs_restarts']``).
    """
    if target_n > g.n:
        raise ValueError(f"target_n {target_n} exceeds graph size {g.n}")
    start = median_degree_node(g)
    visited = np.zeros(g.n, dtype=bool)
    order = np.empty(target_n, dtype=np.int64)
    count = 0
    restarts = 0
    queue: list[int] = [start]
    visited[start] = True
    head = 0
    while count < target_n:
        if head >= len(queue):
            restarts += 1
            nxt = int(np.flatnonzero(~visited)[0])
            visited[nxt] = True
            queue.append(nxt)
        node = queue[head]
        head += 1
        order[count] = node
        count += 1
        nbs, _ = g.neighbors(node)
        for nb in nbs:
            if not visited[nb]:
                visited[nb] = True
                queue.append(int(nb))

    keep = np.zeros(g.n, dtype=bool)
    keep[order] = True
    new_id = np.full(g.n, -1, dtype=np.int64)
    new_id[order] = np.arange(target_n)
    mask = keep[g.arc_src] & keep[g.indices]
    g2 = WeightedGraph.from_arcs(
        target_n,
        new_id[g.arc_src[mask]],
        new_id[g.indices[mask]],
        g.weights[mask],
        volume=g.volume[order],
        meta={"bfs_restarts": restarts, "bfs_start": start},
    )
    return g2


def _pair_bernoulli(rng: np.random.Generator, n_pairs: int, p: float) -> np.ndarray:
    """Indices of successes among ``n_pairs`` Bernoulli(p) trials.

    Uses geometric gap sampling so the cost is proportional to the number of
    successes, not the number of pairs.
    """
    if n_pairs <= 0 or p <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(n_pairs, dtype=np.int64)
    out = []
    log_q = math.log1p(-p)
    idx = -1
    while True:
        gap = int(math.log(rng.random()) / log_q) + 1
        idx += gap
        if idx >= n_pairs:
            break
        out.append(idx)
    return np.array(out, dtype=np.int64)


def planted_partition(
    n: int, blocks: int, p_in: float, p_out: float, seed: int
) -> WeightedGraph:
    """Random unweighted graph with ``blocks`` equal planted communities.

    Every intra-block pair is an edge with probability ``p_in`` and every
    inter-block pair with ``p_out``; isolated nodes are re-attached to one
    random intra-block partner. Deterministic per seed. Block ids are stored
    in ``meta['blocks']``.
    """
    if not (0.0 <= p_out < p_in <= 1.0):
        raise ValueError("need 0 <= p_out < p_in <= 1")
    if n % blocks != 0:
        raise ValueError(f"n={n} not divisible by blocks={blocks}")
    size = n // blocks
    rng = np.random.default_rng(seed)
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []

    tri = size * (size - 1) // 2
    for b in range(blocks):
        hits = _pair_bernoulli(rng, tri, p_in)
        if len(hits):
            # decode linear index over the strict lower triangle of one block;
            # the where-guards absorb sqrt rounding either way
            i = ((1 + np.sqrt(8 * hits + 1)) / 2).astype(np.int64)
            i = np.where(i * (i - 1) // 2 > hits, i - 1, i)
            i = np.where(i * (i + 1) // 2 <= hits, i + 1, i)
            j = hits - i * (i - 1) // 2
            us.append(b * size + i)
            vs.append(b * size + j)
    for b1 in range(blocks):
        for b2 in range(b1 + 1, blocks):
            hits = _pair_bernoulli(rng, size * size, p_out)
            if len(hits):
                us.append(b1 * size + hits // size)
                vs.append(b2 * size + hits % size)

    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)

    deg = np.bincount(u, minlength=n) + np.bincount(v, minlength=n)
    isolated = np.flatnonzero(deg == 0)
    if len(isolated) and size < 2:
        raise ValueError("cannot re-attach isolated nodes with block size 1")
    extra_u = []
    extra_v = []
    for node in isolated:
        if deg[node] > 0:
            continue  # fixed by an earlier re-attachment
        b = node // size
        partner = node
        while partner == node:
            partner = b * size + int(rng.integers(size))
        extra_u.append(node)
        extra_v.append(partner)
        deg[node] += 1
        deg[partner] += 1
    if extra_u:
        u = np.concatenate([u, np.array(extra_u, dtype=np.int64)])
        v = np.concatenate([v, np.array(extra_v, dtype=np.int64)])

    g = WeightedGraph.from_edges(n, u, v, np.ones(len(u)))
    g.meta["blocks"] = np.repeat(np.arange(blocks), size)
    g.meta["generator"] = {
        "name": "planted_partition", "n": n, "blocks": blocks,
        "p_in": p_in, "p_out": p_out, "seed": seed,
    }
    return g
