#!/usr/bin/env python3
"""Benchmark the convolution DP inner loop: compiled extension vs numpy
fallback, with a bitwise equality check between the two."""

import argparse
import time

import numpy as np

from eetlab.backend import available_backends
from eetlab.kernels import KernelSpec, eval_kernel_many


def run_once(step, prev, ker, W):
    out = np.zeros(W + 1)
    step(prev, ker, W, out)
    return out


def bench(W: int, R: int, repeats: int) -> None:
    spec = KernelSpec.power_law(2.5)
    ker = np.ascontiguousarray(eval_kernel_many(spec, np.arange(-W, W + 1)))
    backends = available_backends()
    results = {}
    for name, step in backends.items():
        best = float("inf")
        for _ in range(repeats):
            prev = np.zeros(2 * W + 1)
            prev[W] = 1.0
            t0 = time.perf_counter()
            for _r in range(R):
                half = run_once(step, prev, ker, W)
                prev = np.concatenate([half[:0:-1], half])
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, prev.copy())
        rate = R * (2.0 * W + 1) * (W + 1) / best / 1e9
        print(f"{name:>8}: {best * 1e3:9.2f} ms for R={R}, W={W}  "
              f"({rate:.2f} Gmadd/s)")
    if len(results) == 2:
        (n1, (t1, row1)), (n2, (t2, row2)) = results.items()
        identical = np.array_equal(row1, row2)
        print(f"rows bitwise identical: {identical}")
        print(f"speedup {n2} vs {n1}: {t1 / t2:.2f}x" if t2 < t1
              else f"speedup {n1} vs {n2}: {t2 / t1:.2f}x")
        if not identical:
            raise SystemExit("backend mismatch")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--window", type=int, default=2048)
    ap.add_argument("--orders", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    bench(args.window, args.orders, args.repeats)
