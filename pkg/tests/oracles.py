"""Slow, obviously-correct reference implementations used as test oracles."""

import itertools

import numpy as np


def enumerate_tree(depth, breadth):
    """Every node of the full query tree as (level, path), in depth-first order."""
    nodes = []

    def visit(level, width, prefix):
        for i in range(width):
            path = prefix + (i + 1,)
            nodes.append((level, ".".join(map(str, path))))
            if level < depth:
                child = width // 2 if width // 2 >= 1 else 1
                visit(level + 1, child, path)

    visit(1, breadth, ())
    return nodes


def level_widths(nodes):
    """Largest sibling group per level."""
    groups = {}
    for level, path in nodes:
        parent = path.rpartition(".")[0]
        groups.setdefault(level, {}).setdefault(parent, 0)
        groups[level][parent] += 1
    return [max(groups[k].values()) for k in sorted(groups)]


def is_subsequence(sub, seq):
    it = iter(seq)
    return all(any(x == y for y in it) for x in sub)


def lcs_brute(a, b):
    """Longest common subsequence length by trying subsequences of the shorter list, longest first."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    for r in range(len(short), 0, -1):
        for idx in itertools.combinations(range(len(short)), r):
            if is_subsequence([short[i] for i in idx], long_):
                return r
    return 0


def greedy_brute(A, B):
    """BERTScore precision and recall with explicit loops over token pairs."""
    def dot(x, y):
        s = 0.0
        for p, q in zip(x, y):
            s += p * q
        return s

    sims = [[dot(a, b) for b in B] for a in A]
    p = sum(max(row) for row in sims) / len(A)
    r = sum(max(sims[i][j] for i in range(len(A))) for j in range(len(B))) / len(B)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def transport_vertex_min(a, b, C, tol=1e-10):
    """Minimum cost over all vertices of the transport polytope.

    A vertex is a basic feasible solution supported on m+n-1 cells whose
    constraint columns are linearly independent; every subset is tried.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    m, n = C.shape
    A = np.zeros((m + n, m * n))
    for i in range(m):
        for j in range(n):
            A[i, i * n + j] = 1.0
            A[m + j, i * n + j] = 1.0
    rhs = np.concatenate([a, b])
    k = m + n - 1
    subsets = np.array(list(itertools.combinations(range(m * n), k)))
    cols = A[:, subsets].transpose(1, 0, 2)  # (n_subsets, m+n, k)
    ranks = np.linalg.matrix_rank(cols)
    cols = cols[ranks == k]
    subsets = subsets[ranks == k]
    x = np.einsum("skr,r->sk", np.linalg.pinv(cols), rhs)
    residual = np.abs(np.einsum("srk,sk->sr", cols, x) - rhs).max(axis=1)
    feasible = (residual < 1e-9) & (x.min(axis=1) > -tol)
    costs = (x * C.ravel()[subsets]).sum(axis=1)[feasible]
    return float(costs.min())
