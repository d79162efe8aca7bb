"""Benchmark the compiled similarity kernels against the NumPy fallback.

Times the fused score+select step (the hot loop of trajectory sampling)
at several pool sizes, and a short end-to-end Monte Carlo run on each
backend.

Usage: python benchmarks/bench_kernels.py [--steps 300] [--dim 32]
"""

import argparse
import time

import numpy as np

from frameref_sim.kernels import _pykernels

try:
    from frameref_sim.kernels import _ckernels
except ImportError:
    _ckernels = None


def bench_kernel(backend, matrix, id_rank, steps, k=5, window=3, seed=0):
    rng = np.random.default_rng(seed)
    n = matrix.shape[0]
    alive = np.ones(n, dtype=bool)
    start = time.perf_counter()
    for _ in range(steps):
        window_idx = rng.choice(n, size=window, replace=False).astype(np.int64)
        candidates = np.flatnonzero(alive)
        scores = backend.window_scores(matrix, candidates, window_idx)
        picked = backend.top_k(scores, id_rank[candidates], k)
        alive[candidates[picked[0]]] = False
        if not alive.any():
            alive[:] = True
    return (time.perf_counter() - start) / steps


def bench_monte_carlo(seed=7):
    import sys

    sys.path.insert(0, "tests")
    from synth import CoinFlipPersona, make_pool, make_store

    from frameref_sim.environment import SimConfig, run_monte_carlo

    pool = make_pool(400, seed=seed)
    store = make_store(pool, dim=32, seed=seed)
    config = SimConfig(horizon=100, n_trajectories=10, master_seed=seed)
    start = time.perf_counter()
    run_monte_carlo(pool, store, CoinFlipPersona(), config)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--dim", type=int, default=32)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels not built; benchmarking the fallback only")

    print(f"{'pool size':>10} {'backend':>8} {'ms/step':>10} {'speedup':>8}")
    for n in (1_000, 10_000, 50_000):
        rng = np.random.default_rng(1)
        matrix = rng.normal(size=(n, args.dim))
        matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
        matrix = np.ascontiguousarray(matrix)
        id_rank = rng.permutation(n).astype(np.int64)
        baseline = bench_kernel(_pykernels, matrix, id_rank, args.steps)
        print(f"{n:>10} {'python':>8} {baseline * 1e3:>10.3f} {'1.0x':>8}")
        if _ckernels is not None:
            compiled = bench_kernel(_ckernels, matrix, id_rank, args.steps)
            print(
                f"{n:>10} {'cython':>8} {compiled * 1e3:>10.3f} "
                f"{baseline / compiled:>7.1f}x"
            )

    from frameref_sim import kernels

    print(f"\nend-to-end Monte Carlo (active backend: {kernels.BACKEND})")
    print(f"  10 trajectories x 100 steps on 2,400 variants: {bench_monte_carlo():.2f}s")


if __name__ == "__main__":
    main()
