#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the truncated power iteration loop and the elastic-net coordinate
descent sweep on experiment-sized problems, once per backend:

    python3 benchmarks/bench_kernels.py [--sizes 50,100,200] [--repeats 20]
"""

import argparse
import time

import numpy as np

from rankpca._kernels import BACKEND, fallback

try:
    from rankpca._kernels import _core
except ImportError:
    _core = None


def make_problem(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d + 5))
    gamma = np.ascontiguousarray(a @ a.T / (d + 5))
    x0 = rng.normal(size=d)
    x0 /= np.linalg.norm(x0)
    b = gamma @ x0
    return gamma, x0, b


def bench(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50,100,200")
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = [("python", fallback)]
    if _core is not None:
        backends.append(("compiled", _core))
    print(f"active backend at import: {BACKEND}")
    print(f"{'kernel':<12} {'d':>5} " + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")

    for d in sizes:
        gamma, x0, b = make_problem(d, seed=d)
        k = max(2, d // 10)
        times = []
        for _, impl in backends:
            times.append(
                bench(lambda impl=impl: impl.tpower_loop(gamma, x0, k, 1e-9, 200), args.repeats)
            )
        speed = times[0] / times[-1] if len(times) > 1 else float("nan")
        print(f"{'tpower':<12} {d:>5} " + "".join(f"{t * 1e3:>10.3f}ms" for t in times) + f"{speed:>9.1f}x")

        w0 = np.zeros(d)
        times = []
        for _, impl in backends:
            times.append(
                bench(
                    lambda impl=impl: impl.enet_cd(gamma + 0.1 * np.eye(d), b, 0.05, w0, 1e-10, 500),
                    args.repeats,
                )
            )
        speed = times[0] / times[-1] if len(times) > 1 else float("nan")
        print(f"{'enet_cd':<12} {d:>5} " + "".join(f"{t * 1e3:>10.3f}ms" for t in times) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
