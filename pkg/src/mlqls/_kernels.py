"""Compiled inner loops for the spin-problem solvers.

Both kernels work on the dense (k, k) coupling matrix with zero diagonal and
the length-k field vector; the constant offset is added back by the callers.
Energies are tracked incrementally: flipping spin p changes the energy by
-4*s_p*(Qs)_p - 2*l_p*s_p, and the cached field vector r = Qs is updated in
O(k) after each accepted flip.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _ctz(x):
    c = 0
    while x & 1 == 0:
        x >>= 1
        c += 1
    return c


@njit(cache=True, parallel=True)
def gray_ground_state(Q, l, split_bits):
    """Scan all 2^k spin vectors in binary-reflected Gray order.

    The scan is split over the high ``split_bits`` index bits; within a block
    the flip sequence is the standard low-bit Gray sequence, so the global
    visit order is preserved and ties resolve to the first-visited state.
    Returns (best_energy, best_gray_index).
    """
    k = Q.shape[0]
    low = k - split_bits
    nblocks = 1 << split_bits
    steps = 1 << low
    block_e = np.empty(nblocks)
    block_t = np.empty(nblocks, dtype=np.int64)
    for b in prange(nblocks):
        base = b << low
        g0 = base ^ (base >> 1)
        s = np.empty(k)
        for j in range(k):
            s[j] = 1.0 if (g0 >> j) & 1 else -1.0
        rr = Q @ s
        e = np.dot(s, rr) + np.dot(l, s)
        best_e = e
        best_t = base
        for r in range(1, steps):
            p = _ctz(r)
            sp = s[p]
            e += -4.0 * sp * rr[p] - 2.0 * l[p] * sp
            sp = -sp
            s[p] = sp
            two_sp = 2.0 * sp
            for j in range(k):
                rr[j] += two_sp * Q[p, j]
            if e < best_e:
                best_e = e
                best_t = base + r
        block_e[b] = best_e
        block_t[b] = best_t
    best = 0
    for b in range(1, nblocks):
        if block_e[b] < block_e[best] or (
            block_e[b] == block_e[best] and block_t[b] < block_t[best]
        ):
            best = b
    return block_e[best], block_t[best]


@njit(cache=True)
def anneal_best_of(Q, l, temps, num_samples, seed):
    """Best final state over ``num_samples`` single-flip Metropolis anneals.

    Each sample starts from uniform random spins and runs one full sweep
    (sequential proposals 0..k-1) per temperature. Deterministic per seed.
    """
    np.random.seed(seed)
    k = Q.shape[0]
    best_e = np.inf
    best_s = np.full(k, -1.0)
    for _ in range(num_samples):
        s = np.empty(k)
        for j in range(k):
            s[j] = 1.0 if np.random.random() < 0.5 else -1.0
        rr = Q @ s
        e = np.dot(s, rr) + np.dot(l, s)
        for t_idx in range(len(temps)):
            inv_t = 1.0 / temps[t_idx]
            for p in range(k):
                sp = s[p]
                de = -4.0 * sp * rr[p] - 2.0 * l[p] * sp
                if de <= 0.0 or np.random.random() < np.exp(-de * inv_t):
                    e += de
                    sp = -sp
                    s[p] = sp
                    two_sp = 2.0 * sp
                    for j in range(k):
                        rr[j] += two_sp * Q[p, j]
        if e < best_e:
            best_e = e
            best_s = s.copy()
    return best_e, best_s
