"""Time the compiled and numpy kernels on the simulation inner loop.

    python benchmarks/bench_kernels.py [--reps 50000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from wishart_eig import _kernels_py

try:
    from wishart_eig import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=50000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--n", type=int, default=20)
    args = ap.parse_args()

    chol = np.diag(np.sqrt(np.r_[1.0, np.full(args.p - 1, 0.01)]))
    stack = np.random.default_rng(0).standard_normal((args.reps, args.p, args.p))
    stack = stack + np.swapaxes(stack, 1, 2)
    cases = {
        "wishart_matrices": lambda k: k.wishart_matrices(1, 0, 0, args.reps, float(args.n), chol),
        "jacobi_eigh (values)": lambda k: k.jacobi_eigh(stack, want_vectors=False),
        "wishart_eigvals": lambda k: k.wishart_eigvals(1, 0, 0, args.reps, float(args.n), chol, 1e-13, 50),
    }
    backends = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
    print(f"p={args.p} n={args.n} reps={args.reps}, best of {args.repeat}")
    print(f"{'kernel':24s}" + "".join(f"{k.NAME:>14s}" for k in backends) + ("    speedup" if _kernels_c else ""))
    for name, fn in cases.items():
        secs = [best_of(lambda: fn(k), args.repeat) for k in backends]
        row = f"{name:24s}" + "".join(f"{s * 1e6 / args.reps:11.2f} us" for s in secs)
        if len(secs) == 2:
            row += f"  {secs[0] / secs[1]:8.1f}x"
        print(row)
    if _kernels_c is None:
        print("compiled extension not built; only the numpy kernels were timed")


if __name__ == "__main__":
    main()
