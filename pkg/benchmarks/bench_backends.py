"""numba kernels vs the pure-numpy fallback, plus incremental vs naive.

    python benchmarks/bench_backends.py --m 100 --k 10

Timings are best-of-N wall clock; compilation is excluded by a warm-up call.
"""

import argparse

from covstream import _kernels
from covstream.bench import backend_comparison, ldl_speedup, speedup


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print(f"active backend: {_kernels.active.name}")
    rows = backend_comparison(args.m, args.k, seed=args.seed)
    by_kernel = {}
    for r in rows:
        by_kernel.setdefault(r["kernel"], {})[r["backend"]] = r["seconds"]
    print(f"\n{'kernel':20s} {'numba s':>12s} {'numpy s':>12s} {'ratio':>8s}")
    for name, t in by_kernel.items():
        nb, npy = t.get("numba"), t.get("numpy")
        ratio = f"{npy / nb:8.1f}" if nb and npy else "     n/a"
        print(f"{name:20s} {nb or float('nan'):12.3e} {npy or float('nan'):12.3e} {ratio}")

    print()
    for label, fn in (("covariance update", speedup), ("ldl update", ldl_speedup)):
        r = fn(args.m, args.n, args.k, seed=args.seed)
        print(f"{label:18s} incremental {r['incremental_s']:.3e}s  "
              f"naive {r['naive_s']:.3e}s  speedup {r['speedup']:.0f}x")


if __name__ == "__main__":
    main()
