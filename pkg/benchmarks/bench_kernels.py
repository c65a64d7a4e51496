#!/usr/bin/env python3
"""Benchmark the compiled iteration kernel against the numpy fallback.

Runs the scheduled projector product over seeded random subspaces for a
grid of (dimension, steps) sizes and reports steps/second per kernel.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --dims 16,64,256 --steps 200000
"""

import argparse
import time

import numpy as np

from projprod.kernels import available_kernels


def build_problem(d, n_labels, steps, seed=0):
    rng = np.random.default_rng(seed)
    kmax = d // 2
    q_stack = np.zeros((n_labels, d, kmax))
    ks = np.zeros(n_labels, dtype=np.int64)
    for i in range(n_labels):
        k = int(rng.integers(max(1, kmax // 2), kmax + 1))
        a = rng.standard_normal((d, k))
        q, _ = np.linalg.qr(a)
        q_stack[i, :, :k] = q
        ks[i] = k
    labels = rng.integers(0, n_labels, steps)
    x0 = rng.standard_normal(d)
    x0 /= np.linalg.norm(x0)
    return q_stack, ks, labels, x0, np.zeros(d)


def time_kernel(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dims", default="8,32,128",
                        help="comma-separated ambient dimensions")
    parser.add_argument("--steps", type=int, default=100_000)
    parser.add_argument("--labels", type=int, default=4)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    kernels = available_kernels()
    print(f"kernels available: {', '.join(kernels)}")
    header = f"{'d':>6} {'steps':>9}"
    for name in kernels:
        header += f" {name + ' s':>12} {name + ' st/s':>14}"
    if len(kernels) == 2:
        header += f" {'speedup':>9}"
    print(header)

    for d in (int(x) for x in args.dims.split(",")):
        q_stack, ks, labels, x0, px0 = build_problem(d, args.labels,
                                                     args.steps)
        call = (q_stack, ks, labels, x0, px0, -1.0, 64,
                np.empty(0, dtype=np.int64), np.empty((0, d)), False)
        row = f"{d:>6} {args.steps:>9}"
        times = {}
        final = {}
        for name, fn in kernels.items():
            elapsed, out = time_kernel(fn, call, args.repeats)
            times[name] = elapsed
            final[name] = out["norms"][-1]
            row += f" {elapsed:>12.4f} {args.steps / elapsed:>14.0f}"
        if len(times) == 2:
            row += f" {times['python'] / times['compiled']:>8.1f}x"
        print(row)
        values = list(final.values())
        if len(values) == 2 and not np.isclose(values[0], values[1],
                                               rtol=1e-10, atol=1e-12):
            raise SystemExit(f"kernel results disagree at d={d}: {values}")


if __name__ == "__main__":
    main()
