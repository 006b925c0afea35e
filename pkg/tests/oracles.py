"""Independent reference implementations used to check the fast paths.

Everything here goes through the explicit dense n x n matrix
alpha*vv^T - beta*A, which the package itself never builds.
"""

import numpy as np

from mlqls.graphs import WeightedGraph
from mlqls.objective import ProblemSpec


def dense_matrix(g: WeightedGraph, spec: ProblemSpec) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    A[g.arc_src, g.indices] = g.weights
    return spec.alpha * np.outer(g.volume, g.volume) - spec.beta * A


def objective_dense(g: WeightedGraph, spec: ProblemSpec, spins) -> float:
    s = np.asarray(spins, dtype=np.float64)
    return float(s @ dense_matrix(g, spec) @ s)


def flip_deltas_dense(M: np.ndarray, spins) -> np.ndarray:
    """Objective change for flipping each single spin, from the dense form."""
    s = np.asarray(spins, dtype=np.float64)
    return -4.0 * s * (M @ s) + 4.0 * np.diag(M)


def subqubo_energy_dense(
    g: WeightedGraph, spec: ProblemSpec, spins, free, free_spins
) -> float:
    """Full dense objective with the free nodes overridden."""
    s = np.asarray(spins, dtype=np.float64).copy()
    s[np.asarray(free)] = np.asarray(free_spins, dtype=np.float64)
    return objective_dense(g, spec, s)


def enumerate_min(quadratic: np.ndarray, linear: np.ndarray, constant: float):
    """Naive O(2^k k^2) ground-state search by direct evaluation."""
    k = len(linear)
    best_e = np.inf
    best_s = None
    for t in range(2 ** k):
        s = np.where((t >> np.arange(k)) & 1, 1.0, -1.0)
        e = constant + s @ quadratic @ s + linear @ s
        if e < best_e:
            best_e = e
            best_s = s
    return best_e, best_s
