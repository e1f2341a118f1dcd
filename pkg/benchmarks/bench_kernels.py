"""Time the numba kernels against the numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 300]

Each kernel runs once untimed so JIT compilation is excluded.
"""

import argparse
import time

import numpy as np

from deepresearch import _accel
from deepresearch.kernels import greedy, lcs, transport


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, rng):
    a = rng.integers(0, 200, 4 * size)
    b = rng.integers(0, 200, 4 * size)
    yield "lcs", f"{a.size}x{b.size} tokens", lcs.lcs_length_numpy, lcs.lcs_length_numba, (a, b)

    A = rng.standard_normal((510, 384))
    B = rng.standard_normal((510, 384))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    B /= np.linalg.norm(B, axis=1, keepdims=True)
    yield "greedy", "510x510x384", greedy.greedy_match_numpy, greedy.greedy_match_numba, (A, B)

    x = rng.random(size) + 1e-3
    y = rng.random(size) + 1e-3
    C = 1.0 - np.clip(rng.uniform(-1, 1, (size, size)), -1, 1)
    args = (x / x.sum(), y / y.sum(), C)
    yield "transport", f"{size}x{size}", transport.solve_transport_numpy, transport.solve_transport_numba, args


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(opts.seed)
    print(f"{'kernel':<10} {'problem':<18} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for name, shape, slow, fast, args in cases(opts.size, rng):
        ref, got = slow(*args), fast(*args)
        if name == "transport":
            assert abs(ref.cost - got.cost) < 1e-9, (ref.cost, got.cost)
        elif name == "greedy":
            assert np.allclose(ref, got, atol=1e-12)
        else:
            assert ref == got
        t_np = _best(lambda: slow(*args), opts.repeat)
        t_nb = _best(lambda: fast(*args), opts.repeat)
        print(f"{name:<10} {shape:<18} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
