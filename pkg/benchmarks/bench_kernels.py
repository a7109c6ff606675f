"""Compare the numba and numpy Fock-space kernels.

    python3 benchmarks/bench_kernels.py [--sizes 6 8 10] [--repeat 3]

Both paths are checked for agreement before timing; the first numba call
(compilation, or loading from cache) is excluded.
"""
import argparse
import time

import numpy as np

from nesstransport import _kernels


def best_of(f, arg, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f(arg)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':8} {'n':>3} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8}")
    for n in args.sizes:
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = A + A.conj().T
        for name, fnp, fnb in (
            ("dgamma", _kernels.dgamma_numpy, _kernels.dgamma_numba),
            ("gamma", _kernels.gamma_numpy, _kernels.gamma_numba),
        ):
            ref = fnp(A)
            got = fnb(A)  # warm-up / compile
            err = np.abs(ref - got).max()
            if err > 1e-9 * max(1.0, np.abs(ref).max()):
                raise SystemExit(f"{name} n={n}: paths disagree by {err:.2e}")
            tn = best_of(fnp, A, args.repeat)
            tb = best_of(fnb, A, args.repeat)
            print(f"{name:8} {n:>3} {tn:>11.4f} {tb:>11.4f} {tn / tb:>8.1f}")


if __name__ == "__main__":
    main()
