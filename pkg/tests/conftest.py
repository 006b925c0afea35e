import numpy as np
import pytest

from mlqls.graphs import WeightedGraph, planted_partition


def er_graph(rng: np.random.Generator, n: int, p: float,
             weighted: bool = False) -> WeightedGraph:
    """Erdos-Renyi test instance; isolated nodes get one random edge."""
    iu, ju = np.triu_indices(n, 1)
    mask = rng.random(len(iu)) < p
    if not mask.any():
        mask[rng.integers(len(mask))] = True
    u, v = list(iu[mask]), list(ju[mask])
    deg = np.bincount(u, minlength=n) + np.bincount(v, minlength=n)
    for node in np.flatnonzero(deg == 0):
        partner = node
        while partner == node:
            partner = int(rng.integers(n))
        u.append(node)
        v.append(partner)
        deg[node] += 1
        deg[partner] += 1
    if weighted:
        w = rng.uniform(0.5, 3.0, size=len(u))
    else:
        w = np.ones(len(u))
    return WeightedGraph.from_edges(n, np.array(u), np.array(v), w)


def random_instance(rng: np.random.Generator, n_max: int = 200) -> WeightedGraph:
    """Mix of ER and planted-partition instances for property suites."""
    if rng.random() < 0.5:
        n = int(rng.integers(10, n_max + 1))
        p = float(rng.uniform(0.02, 0.2))
        return er_graph(rng, n, p, weighted=bool(rng.random() < 0.3))
    blocks = int(rng.choice([2, 4]))
    n = int(rng.integers(10, n_max + 1)) // blocks * blocks
    n = max(n, 2 * blocks)
    return planted_partition(n, blocks, 0.2, 0.02, int(rng.integers(2 ** 31)))


def random_spins(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.integers(0, 2, size=n) * 2 - 1).astype(np.int8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def p4():
    """Path 0-1-2-3 with unit weights."""
    return WeightedGraph.from_edges(4, [0, 1, 2], [1, 2, 3], [1, 1, 1])


@pytest.fixture
def k4():
    u, v = np.triu_indices(4, 1)
    return WeightedGraph.from_edges(4, u, v, np.ones(6))
