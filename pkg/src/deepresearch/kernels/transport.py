"""Exact transportation-problem solver (primal transportation simplex).

The basis is kept as a spanning tree over ``m + n`` nodes (rows first, then
columns) with one edge per basic cell. Start from the least-cost rule,
price with row/column potentials, pivot around the unique tree cycle closed
by the entering cell. Pricing is Dantzig's rule; after a run of
degenerate pivots longer than ``m + n`` it switches to Bland's rule so the
method cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _accel

_TOL = 1e-12


@dataclass(frozen=True)
class TransportSolution:
    plan: np.ndarray
    cost: float
    iterations: int


def _least_cost(a, b, C, bi, bj, x):
    m = a.shape[0]
    n = b.shape[0]
    s = a.copy()
    d = b.copy()
    row_alive = np.ones(m, dtype=np.bool_)
    col_alive = np.ones(n, dtype=np.bool_)
    alive_r = m
    alive_c = n
    order = np.argsort(C.ravel(), kind="mergesort")
    k = 0
    for t in range(order.shape[0]):
        i = order[t] // n
        j = order[t] % n
        if not row_alive[i] or not col_alive[j]:
            continue
        q = min(s[i], d[j])
        bi[k] = i
        bj[k] = j
        x[k] = q
        k += 1
        s[i] -= q
        d[j] -= q
        if alive_r == 1 and alive_c == 1:
            break
        # retire exactly one line per allocation so the cells form a spanning tree
        if s[i] <= d[j] and alive_r > 1:
            row_alive[i] = False
            alive_r -= 1
        elif alive_c > 1:
            col_alive[j] = False
            alive_c -= 1
        else:
            row_alive[i] = False
            alive_r -= 1
    return k


def _adjacency(m, n, bi, bj, start, adj):
    nn = m + n
    ne = m + n - 1
    start[:] = 0
    for k in range(ne):
        start[bi[k] + 1] += 1
        start[m + bj[k] + 1] += 1
    for t in range(nn):
        start[t + 1] += start[t]
    fill = start[:nn].copy()
    for k in range(ne):
        r = bi[k]
        c = m + bj[k]
        adj[fill[r]] = k
        fill[r] += 1
        adj[fill[c]] = k
        fill[c] += 1


def _potentials(C, m, n, bi, bj, start, adj, u, v, queue, seen):
    seen[:] = False
    u[0] = 0.0
    seen[0] = True
    queue[0] = 0
    head = 0
    tail = 1
    while head < tail:
        node = queue[head]
        head += 1
        for t in range(start[node], start[node + 1]):
            k = adj[t]
            if node < m:
                other = m + bj[k]
                if not seen[other]:
                    v[bj[k]] = C[bi[k], bj[k]] - u[node]
                    seen[other] = True
                    queue[tail] = other
                    tail += 1
            else:
                other = bi[k]
                if not seen[other]:
                    u[other] = C[bi[k], bj[k]] - v[node - m]
                    seen[other] = True
                    queue[tail] = other
                    tail += 1


def _tree_path(p, q, m, bi, bj, start, adj, queue, seen, parent_edge, path):
    """Edges on the tree path from column node ``q`` back to row node ``p``.

    ``path[0]`` touches column ``q``; the path length is returned and is
    always odd.
    """
    seen[:] = False
    seen[p] = True
    queue[0] = p
    head = 0
    tail = 1
    target = m + q
    while head < tail:
        node = queue[head]
        head += 1
        if node == target:
            break
        for t in range(start[node], start[node + 1]):
            k = adj[t]
            if node < m:
                other = m + bj[k]
            else:
                other = bi[k]
            if not seen[other]:
                seen[other] = True
                parent_edge[other] = k
                queue[tail] = other
                tail += 1
    length = 0
    node = target
    while node != p:
        k = parent_edge[node]
        path[length] = k
        length += 1
        if node < m:
            node = m + bj[k]
        else:
            node = bi[k]
    return length


def _pivot(p, q, n, bi, bj, x, inb, path, length, bland):
    theta = np.inf
    leave = -1
    best_idx = -1
    for t in range(0, length, 2):
        k = path[t]
        idx = bi[k] * n + bj[k]
        if x[k] < theta or (bland and x[k] == theta and idx < best_idx):
            theta = x[k]
            leave = t
            best_idx = idx
    for t in range(length):
        k = path[t]
        if t % 2 == 0:
            x[k] -= theta
        else:
            x[k] += theta
    kl = path[leave]
    inb[bi[kl], bj[kl]] = False
    bi[kl] = p
    bj[kl] = q
    x[kl] = theta
    inb[p, q] = True
    return theta


def _entering_loop(C, u, v, inb, bland):
    m, n = C.shape
    best = -_TOL
    bp = -1
    bq = -1
    for i in range(m):
        for j in range(n):
            if inb[i, j]:
                continue
            r = C[i, j] - u[i] - v[j]
            if r < best:
                best = r
                bp = i
                bq = j
                if bland:
                    return bp, bq
    return bp, bq


def _entering_numpy(C, u, v, inb, bland):
    r = C - u[:, None] - v[None, :]
    r[inb] = 0.0
    if bland:
        hits = np.flatnonzero(r < -_TOL)
        if hits.size == 0:
            return -1, -1
        idx = int(hits[0])
    else:
        idx = int(np.argmin(r))
        if r.flat[idx] >= -_TOL:
            return -1, -1
    return divmod(idx, C.shape[1])


def _solve_loop(a, b, C, max_iter):
    m = a.shape[0]
    n = b.shape[0]
    ne = m + n - 1
    bi = np.zeros(ne, dtype=np.int64)
    bj = np.zeros(ne, dtype=np.int64)
    x = np.zeros(ne)
    _least_cost_j(a, b, C, bi, bj, x)
    inb = np.zeros((m, n), dtype=np.bool_)
    for k in range(ne):
        inb[bi[k], bj[k]] = True
    start = np.zeros(m + n + 1, dtype=np.int64)
    adj = np.zeros(2 * ne, dtype=np.int64)
    u = np.zeros(m)
    v = np.zeros(n)
    queue = np.zeros(m + n, dtype=np.int64)
    seen = np.zeros(m + n, dtype=np.bool_)
    parent_edge = np.zeros(m + n, dtype=np.int64)
    path = np.zeros(m + n, dtype=np.int64)
    streak = 0
    it = 0
    converged = False
    while it < max_iter:
        _adjacency_j(m, n, bi, bj, start, adj)
        _potentials_j(C, m, n, bi, bj, start, adj, u, v, queue, seen)
        bland = streak > m + n
        p, q = _entering_loop_j(C, u, v, inb, bland)
        if p < 0:
            converged = True
            break
        length = _tree_path_j(p, q, m, bi, bj, start, adj, queue, seen, parent_edge, path)
        theta = _pivot_j(p, q, n, bi, bj, x, inb, path, length, bland)
        streak = streak + 1 if theta <= 0.0 else 0
        it += 1
    return bi, bj, x, it, converged


def _solve_numpy(a, b, C, max_iter):
    m = a.shape[0]
    n = b.shape[0]
    ne = m + n - 1
    bi = np.zeros(ne, dtype=np.int64)
    bj = np.zeros(ne, dtype=np.int64)
    x = np.zeros(ne)
    _least_cost(a, b, C, bi, bj, x)
    inb = np.zeros((m, n), dtype=bool)
    inb[bi, bj] = True
    start = np.zeros(m + n + 1, dtype=np.int64)
    adj = np.zeros(2 * ne, dtype=np.int64)
    u = np.zeros(m)
    v = np.zeros(n)
    queue = np.zeros(m + n, dtype=np.int64)
    seen = np.zeros(m + n, dtype=bool)
    parent_edge = np.zeros(m + n, dtype=np.int64)
    path = np.zeros(m + n, dtype=np.int64)
    streak = 0
    it = 0
    converged = False
    while it < max_iter:
        _adjacency(m, n, bi, bj, start, adj)
        _potentials(C, m, n, bi, bj, start, adj, u, v, queue, seen)
        bland = streak > m + n
        p, q = _entering_numpy(C, u, v, inb, bland)
        if p < 0:
            converged = True
            break
        length = _tree_path(p, q, m, bi, bj, start, adj, queue, seen, parent_edge, path)
        theta = _pivot(p, q, n, bi, bj, x, inb, path, length, bland)
        streak = streak + 1 if theta <= 0.0 else 0
        it += 1
    return bi, bj, x, it, converged


_least_cost_j = _accel.njit(_least_cost)
_adjacency_j = _accel.njit(_adjacency)
_potentials_j = _accel.njit(_potentials)
_tree_path_j = _accel.njit(_tree_path)
_pivot_j = _accel.njit(_pivot)
_entering_loop_j = _accel.njit(_entering_loop)
_solve_jit = _accel.njit(_solve_loop)


def _prepare(a, b, C):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or C.shape != (a.size, b.size):
        raise ValueError(f"shape mismatch: a{a.shape}, b{b.shape}, C{C.shape}")
    if a.size == 0 or b.size == 0:
        raise ValueError("both marginals must be non-empty")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("marginals must be non-negative")
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or sb <= 0:
        raise ValueError("marginals must have positive mass")
    if abs(sa - sb) > 1e-9 * max(sa, sb):
        raise ValueError(f"marginals carry different mass ({sa} vs {sb})")
    return a, b * (sa / sb), C


def _finish(bi, bj, x, it, converged, shape, C, max_iter):
    if not converged:
        raise RuntimeError(f"transport simplex did not converge in {max_iter} pivots")
    plan = np.zeros(shape)
    np.add.at(plan, (bi, bj), np.maximum(x, 0.0))
    return TransportSolution(plan=plan, cost=float((plan * C).sum()), iterations=int(it))


def _default_max_iter(m: int, n: int) -> int:
    return 50 * m * n + 1000


def solve_transport_numpy(a, b, C, max_iter: int | None = None) -> TransportSolution:
    a, b, C = _prepare(a, b, C)
    max_iter = max_iter or _default_max_iter(a.size, b.size)
    return _finish(*_solve_numpy(a, b, C, max_iter), C.shape, C, max_iter)


def solve_transport_numba(a, b, C, max_iter: int | None = None) -> TransportSolution:
    if _solve_jit is None:
        raise RuntimeError("numba is not available")
    a, b, C = _prepare(a, b, C)
    max_iter = max_iter or _default_max_iter(a.size, b.size)
    return _finish(*_solve_jit(a, b, C, max_iter), C.shape, C, max_iter)


def solve_transport(a, b, C, max_iter: int | None = None) -> TransportSolution:
    """Minimise ``sum(plan * C)`` subject to ``plan`` rows summing to ``a`` and columns to ``b``."""
    if _accel.USE_NUMBA:
        return solve_transport_numba(a, b, C, max_iter)
    return solve_transport_numpy(a, b, C, max_iter)
