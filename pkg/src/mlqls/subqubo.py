"""Sub-QUBO construction over a free-variable set, without the full matrix.

Freezing all but k variables of the quadratic form s^T (alpha*vv^T -
beta*A) s + fixed terms yields a k-variable problem: a k x k coupling block,
a linear field from the fixed variables, and a constant. The field and the
constant come from the partition-state aggregates, so the build costs
O(k^2 + sum of free-node degrees) and the dense n x n matrix (in particular
the rank-one vv^T block) never exists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graphs import WeightedGraph
from .objective import PartitionState, ProblemSpec, evaluate

__all__ = ["SubQubo", "select_free", "build_subqubo", "scale_for_precision"]


@dataclass
class SubQubo:
    """Minimization problem constant + s^T quadratic s + linear . s.

    ``quadratic`` is symmetric with a zero diagonal (diagonal terms are
    constants for spin variables and live in ``constant``). The penalty_*
    fields hold the volume-product part of the coefficients so the two matrix
    parts can later be rescaled separately; they are dropped after scaling.
    """

    ids: np.ndarray  # global node ids of the k free variables
    quadratic: np.ndarray  # (k, k) float64, symmetric, zero diagonal
    linear: np.ndarray  # (k,) float64
    constant: float
    penalty_quadratic: np.ndarray | None = None
    penalty_linear: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.linear)

    def energy(self, spins: np.ndarray) -> float:
        s = np.asarray(spins, dtype=np.float64)
        return float(self.constant + s @ self.quadratic @ s + self.linear @ s)

    def to_json(self) -> str:
        iu, ju = np.triu_indices(self.k, 1)
        nz = self.quadratic[iu, ju] != 0.0
        return json.dumps({
            "n": self.k,
            "linear": self.linear.tolist(),
            "quadratic": [
                [int(i), int(j), float(w)]
                for i, j, w in zip(iu[nz], ju[nz], self.quadratic[iu, ju][nz])
            ],
            "offset": float(self.constant),
            "sense": "min",
            "vars": "spin",
        })

    @classmethod
    def from_json(cls, text: str) -> "SubQubo":
        doc = json.loads(text)
        k = int(doc["n"])
        quad = np.zeros((k, k))
        for i, j, w in doc["quadratic"]:
            quad[i, j] = quad[j, i] = w
        return cls(
            ids=np.arange(k, dtype=np.int64),
            quadratic=quad,
            linear=np.asarray(doc["linear"], dtype=np.float64),
            constant=float(doc.get("offset", 0.0)),
        )


def select_free(
    gains_vec: np.ndarray,
    k_sub: int,
    rng: np.random.Generator | None = None,
    stochastic: bool = False,
) -> np.ndarray:
    """Ids of the ``k_sub`` highest-gain nodes, ties broken by lower id.

    With ``stochastic=True`` the free set is sampled uniformly from the top
    2*k_sub candidates instead, which breaks repetition cycles.
    """
    if k_sub < 1:
        raise ValueError("k_sub must be >= 1")
    n = len(gains_vec)
    if k_sub >= n:
        return np.arange(n, dtype=np.int64)
    order = np.lexsort((np.arange(n), -gains_vec))
    if stochastic:
        if rng is None:
            raise ValueError("stochastic selection needs an rng")
        pool = order[: min(2 * k_sub, n)]
        return np.sort(rng.choice(pool, size=k_sub, replace=False))
    return np.sort(order[:k_sub])


def build_subqubo(
    g: WeightedGraph,
    spec: ProblemSpec,
    state: PartitionState,
    free: np.ndarray,
) -> SubQubo:
    """Materialize the sub-QUBO for the given free node ids.

    The invariant: for any assignment of the free spins, the sub-QUBO energy
    equals the full penalized objective with all other spins held at their
    current values.
    """
    free = np.asarray(free, dtype=np.int64)
    if len(np.unique(free)) != len(free):
        raise ValueError("free ids must be distinct")
    if len(free) and (free.min() < 0 or free.max() >= g.n):
        raise ValueError("free id out of range")
    k = len(free)
    v = g.volume[free]
    s_free = state.spin[free].astype(np.float64)

    pen_quad = spec.alpha * np.outer(v, v)
    np.fill_diagonal(pen_quad, 0.0)

    local = np.full(g.n, -1, dtype=np.int64)
    local[free] = np.arange(k)
    adj = np.zeros((k, k))
    t_fixed = np.empty(k)
    for a in range(k):
        nbs, ws = g.neighbors(int(free[a]))
        t_all = float(np.dot(ws, state.spin[nbs]))
        loc = local[nbs]
        inside = loc >= 0
        adj[a, loc[inside]] = ws[inside]
        t_fixed[a] = t_all - float(np.dot(ws[inside], state.spin[nbs[inside]]))

    quad = pen_quad - spec.beta * adj

    # sum over fixed j of v_j s_j, from the O(1) aggregates
    dvol_fixed = (state.vol_c2 - state.vol_c1) - float(np.dot(v, s_free))
    pen_lin = 2.0 * spec.alpha * v * dvol_fixed
    lin = pen_lin - 2.0 * spec.beta * t_fixed

    full = evaluate(g, spec, state).penalized
    constant = full - float(s_free @ quad @ s_free + lin @ s_free)
    return SubQubo(
        ids=free,
        quadratic=quad,
        linear=lin,
        constant=constant,
        penalty_quadratic=pen_quad,
        penalty_linear=pen_lin,
    )


def _quantize(x: np.ndarray, levels: int) -> np.ndarray:
    """Round to the nearest of ``levels`` uniform values in [-1, 1]."""
    step = (levels - 1) / 2.0
    return np.round((np.clip(x, -1.0, 1.0) + 1.0) * step) / step - 1.0


def scale_for_precision(
    q: SubQubo,
    mode: str = "none",
    levels: int | None = None,
    penalty_ratio: float = 1.0,
) -> SubQubo:
    """Rescale coefficients to the unit range a limited-precision solver sees.

    ``separate`` divides the volume-penalty part and the adjacency part by
    their own max-abs coefficients before recombining (weighted by
    ``penalty_ratio``), so a dominant penalty cannot flush the adjacency
    entries to zero when the result is quantized. ``naive`` applies one
    global scale. An all-zero part is left alone. The constant is carried
    through unscaled: it shifts every energy equally, so the solver's argmin
    is unaffected.
    """
    if mode == "none":
        return q
    if levels is not None and levels < 2:
        raise ValueError("levels must be >= 2 when quantizing")

    if mode == "naive":
        scale = max(np.abs(q.quadratic).max(), np.abs(q.linear).max())
        if scale == 0.0:
            quad, lin = q.quadratic.copy(), q.linear.copy()
        else:
            quad, lin = q.quadratic / scale, q.linear / scale
    elif mode == "separate":
        if q.penalty_quadratic is None or q.penalty_linear is None:
            raise ValueError("separate scaling needs the part decomposition")
        pq, pl = q.penalty_quadratic, q.penalty_linear
        aq, al = q.quadratic - pq, q.linear - pl
        p_scale = max(np.abs(pq).max(), np.abs(pl).max())
        a_scale = max(np.abs(aq).max(), np.abs(al).max())
        if p_scale == 0.0:
            p_scale = 1.0
        if a_scale == 0.0:
            a_scale = 1.0
        quad = penalty_ratio * pq / p_scale + aq / a_scale
        lin = penalty_ratio * pl / p_scale + al / a_scale
        norm = max(np.abs(quad).max(), np.abs(lin).max())
        if norm > 0.0:
            quad /= norm
            lin /= norm
    else:
        raise ValueError(f"unknown precision mode {mode!r}")

    if levels is not None:
        quad = _quantize(quad, levels)
        np.fill_diagonal(quad, 0.0)
        lin = _quantize(lin, levels)
    return SubQubo(ids=q.ids, quadratic=quad, linear=lin, constant=q.constant)
