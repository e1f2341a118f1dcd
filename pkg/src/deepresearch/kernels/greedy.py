"""Greedy max-cosine matching between two sets of unit vectors."""

from __future__ import annotations

import numpy as np

from .. import _accel


def _greedy_loop(A, B):
    m = A.shape[0]
    n = B.shape[0]
    dim = A.shape[1]
    row_best = np.full(m, -np.inf)
    col_best = np.full(n, -np.inf)
    for i in range(m):
        for j in range(n):
            s = 0.0
            for k in range(dim):
                s += A[i, k] * B[j, k]
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            if s > row_best[i]:
                row_best[i] = s
            if s > col_best[j]:
                col_best[j] = s
    return row_best.sum() / m, col_best.sum() / n


_greedy_jit = _accel.njit(_greedy_loop)


def greedy_match_numpy(A: np.ndarray, B: np.ndarray) -> tuple[float, float]:
    sim = np.clip(A @ B.T, -1.0, 1.0)
    return float(sim.max(axis=1).mean()), float(sim.max(axis=0).mean())


def greedy_match_numba(A: np.ndarray, B: np.ndarray) -> tuple[float, float]:
    if _greedy_jit is None:
        raise RuntimeError("numba is not available")
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    p, r = _greedy_jit(A, B)
    return float(p), float(r)


def greedy_match(A: np.ndarray, B: np.ndarray) -> tuple[float, float]:
    """Return ``(precision, recall)`` for row-normalised embeddings ``A`` and ``B``.

    Precision averages, over rows of ``A``, the best cosine against any row
    of ``B``; recall is the same with the roles swapped.
    """
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("greedy matching needs at least one vector on each side")
    # the BLAS product beats the fused loop at every realistic chunk size;
    # greedy_match_numba stays available when the m x n matrix will not fit
    return greedy_match_numpy(A, B)
