"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

The first numba call of each kernel (JIT compile or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from submax import kernels
from submax.core import gaussian_matrix
from submax.rng import generator


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    W = np.ascontiguousarray(gaussian_matrix(200, 200, 1).values)
    init = np.stack([np.sort(generator(i).choice(200, 10, replace=False)) for i in range(200)])
    small = np.ascontiguousarray(gaussian_matrix(12, 12, 2).values)
    blocks = generator(3).standard_normal((20_000, 4, 4))
    return [
        ("search_batch 200x200, k=l=10, 200 starts", "search_batch", (W, 10, 10, init, 1000)),
        ("exhaustive_max_sum 12x12, k=l=4", "exhaustive_max_sum", (small, 4, 4)),
        ("exhaustive_min_anova 12x12, k=l=3", "exhaustive_min_anova", (small, 3, 3)),
        ("anova_batch 20000 x 4x4", "anova_batch", (blocks,)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':45} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for label, name, argv in cases():
        kernels.NUMBA_IMPLS[name](*argv)  # compile / load cache
        t_np = best_of(lambda: kernels.NUMPY_IMPLS[name](*argv), args.repeat)
        t_nb = best_of(lambda: kernels.NUMBA_IMPLS[name](*argv), args.repeat)
        print(f"{label:45} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
