"""Numba switch.

Set ``DR_DISABLE_NUMBA=1`` to force the pure numpy kernels. When numba is
not importable the numpy path is used automatically.
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _flag("DR_DISABLE_NUMBA")


def njit(fn):
    """``numba.njit(cache=True)`` when numba is available, else ``None``.

    Callers keep the plain-Python function around for the fallback path, so
    a missing numba yields ``None`` rather than silently returning ``fn``.
    """
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True)(fn)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
