"""Time the numba and numpy search kernels against each other.

    python benchmarks/bench_kernels.py [--n 6] [--repeat 5]

Reports the best-of-``repeat`` wall time per call for one Jacobi sweep
(each cost kind) and for batched cost evaluation, plus the speedup.
The first numba call (compilation) is excluded.
"""

import argparse
import math
import time

import numpy as np

from spikebasis.search import kernels
from spikebasis.search.oracles import random_orthogonal

KINDS = {"cp(p=0.5)": (kernels.KIND_LP, 0.5), "ckappa": (kernels.KIND_KAPPA, 1.0),
         "soft-ch(h=0.01)": (kernels.KIND_SOFT_H, 1.0)}


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_sweep(n, kind, p, repeat, rng):
    pairs = kernels.givens_pairs(n)
    start = random_orthogonal(n, rng)
    h = 0.01
    width = 4 * h if kind == kernels.KIND_SOFT_H else 0.0
    out = {}
    for backend in ("numba", "numpy"):
        sweep = kernels.kernel("sweep", backend)
        sweep(start.copy(), pairs, kind, p, 1.0, h, 24, width, 1e-12)  # warm-up / compile
        out[backend] = best_time(lambda: sweep(start.copy(), pairs, kind, p, 1.0, h, 24, width, 1e-12),
                                 repeat)
    return out


def bench_batch(n, count, repeat, rng):
    mats = np.stack([random_orthogonal(n, rng) for _ in range(count)])
    out = {}
    for backend in ("numba", "numpy"):
        f = kernels.kernel("batch_cost", backend)
        f(mats, kernels.KIND_KAPPA, 1.0, 1.0, 1.0)
        out[backend] = best_time(lambda: f(mats, kernels.KIND_KAPPA, 1.0, 1.0, 1.0), repeat)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    rows = [(f"sweep {name}", bench_sweep(args.n, k, p, args.repeat, rng)) for name, (k, p) in KINDS.items()]
    rows.append((f"batch_cost x{args.batch}", bench_batch(args.n, args.batch, args.repeat, rng)))
    for name, t in rows:
        speed = t["numpy"] / t["numba"] if t["numba"] > 0 else math.inf
        print(f"{name:<24}{1e3 * t['numba']:>12.3f}{1e3 * t['numpy']:>12.3f}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
