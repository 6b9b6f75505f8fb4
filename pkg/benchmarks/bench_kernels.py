#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy twins.

Runs the four hot kernels at the benchmark-experiment working sizes (the
5x100 network on a couple hundred samples, plus a bulk prediction batch)
and prints per-call medians and the speedup.  Both implementations are
imported directly, so the CLIPNET_BACKEND selection does not matter here.

Usage: python benchmarks/bench_kernels.py [--repeats 200]
"""
import argparse
import statistics
import time

import numpy as np

import clipnet  # noqa: F401  (sets BLAS thread caps before numpy heats up)
from clipnet import _kernels_nb, _kernels_np
from clipnet.network import MlpSpec, flatten, init_params


def time_call(fn, *args, repeats=200, warmup=5):
    for _ in range(warmup):
        fn(*args)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    spec = MlpSpec(10, (100,) * 5)
    theta = flatten(init_params(spec, 0))
    dims = spec.dims
    X = rng.random((160, 10))
    y = rng.normal(size=160)
    Xbig = rng.random((20_000, 10))
    g = rng.normal(size=theta.size)
    h = np.sign(theta) * (np.abs(theta) > 1e-2)
    Xtr = rng.random((160, 10))
    ytr = rng.normal(size=160)
    Xq = rng.random((2_000, 10))

    cases = [
        ("risk_grad (n=160, 5x100)",
         lambda impl: impl.risk_grad(theta, dims, X, y, 0, 0.0, 0)),
        ("risk_value (n=160, 5x100)",
         lambda impl: impl.risk_value(theta, dims, X, y, 0, 0.0, 0)),
        ("forward_batch (n=20k, 5x100)",
         lambda impl: impl.forward_batch(theta, dims, Xbig, 0, 0.0)),
        ("prox_step (p=41601)",
         lambda impl: impl.prox_step(theta, g, h, 1e-2, 0.1)),
        ("knn_query (160 train, 2k queries, k=5)",
         lambda impl: impl.knn_query(Xtr, ytr, Xq, 5, False)),
    ]

    print(f"{'kernel':<42} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call in cases:
        t_np = time_call(lambda: call(_kernels_np), repeats=args.repeats)
        t_nb = time_call(lambda: call(_kernels_nb), repeats=args.repeats)
        print(f"{name:<42} {t_np * 1e3:>8.3f}ms {t_nb * 1e3:>8.3f}ms "
              f"{t_np / t_nb:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
