"""Longest-common-subsequence length over integer-coded token sequences."""

from __future__ import annotations

import numpy as np

from .. import _accel


def _lcs_loop(a, b):
    n = b.shape[0]
    prev = np.zeros(n + 1, dtype=np.int64)
    curr = np.zeros(n + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        ai = a[i]
        curr[0] = 0
        for j in range(n):
            if ai == b[j]:
                curr[j + 1] = prev[j] + 1
            elif prev[j + 1] >= curr[j]:
                curr[j + 1] = prev[j + 1]
            else:
                curr[j + 1] = curr[j]
        prev, curr = curr, prev
    return prev[n]


def lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Row-vectorised DP.

    Each row satisfies ``row[j] = max(row[j-1], prev[j], match[j] * (prev[j-1] + 1))``,
    so the left-to-right dependency collapses to a running maximum.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    if a.size < b.size:
        a, b = b, a
    prev = np.zeros(b.size + 1, dtype=np.int64)
    row = np.empty_like(prev)
    row[0] = 0
    for ai in a:
        cand = np.where(b == ai, prev[:-1] + 1, prev[1:])
        np.maximum.accumulate(cand, out=row[1:])
        prev, row = row, prev
    return int(prev[-1])


_lcs_jit = _accel.njit(_lcs_loop)


def lcs_length_numba(a: np.ndarray, b: np.ndarray) -> int:
    if _lcs_jit is None:
        raise RuntimeError("numba is not available")
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    return int(_lcs_jit(a, b))


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    if _accel.USE_NUMBA:
        return lcs_length_numba(a, b)
    return lcs_length_numpy(a, b)
