#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py [--repeat 7]

The same dispatch table the library uses at runtime is exercised, so the
numbers reflect exactly what KYPCERT_BACKEND=numpy would cost.
"""

import argparse
import time

import numpy as np

from kypcert import _kernels


def _args(rng, name, size):
    n, m, p = size, max(size // 2, 1), max(size // 2, 1)
    C = rng.normal(size=(p, n)) + 1j * rng.normal(size=(p, n))
    A = 0.4 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
    B = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    if name == "power_products":
        return (C, A, B, 512)
    if name == "block_toeplitz":
        table = rng.normal(size=(1025, p, m)) + 0j
        return (table, 256, 256, 0)
    if name == "resolvent_sweep":
        return (C, A, B, np.exp(2j * np.pi * np.arange(2048) / 2048))
    if name == "sigma_max_sweep":
        return (rng.normal(size=(2048, p + n, m + n)) + 0j,)
    if name in ("recur_forward", "recur_backward"):
        u = rng.normal(size=(20000, m)) + 0j
        return (A, B, u, np.zeros(n, dtype=complex))
    raise ValueError(name)


def bench(repeat):
    rng = np.random.default_rng(0)
    names = ["power_products", "block_toeplitz", "resolvent_sweep",
             "sigma_max_sweep", "recur_forward", "recur_backward"]
    backends = _kernels.available_backends()
    print(f"backends: {', '.join(backends)}   (n=8 state, repeat={repeat})")
    header = f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends)
    if "numba" in backends and "numpy" in backends:
        header += f"{'speedup':>10}"
    print(header)
    for name in names:
        fn = getattr(_kernels, name)
        args = _args(rng, name, 8)
        times = {}
        for backend in backends:
            _kernels.set_backend(backend)
            fn(*args)  # warm up / jit
            best = np.inf
            for _ in range(repeat):
                t0 = time.perf_counter()
                fn(*args)
                best = min(best, time.perf_counter() - t0)
            times[backend] = best
        row = f"{name:<18}" + "".join(f"{times[b]*1e3:>10.2f}ms" for b in backends)
        if "numba" in times and "numpy" in times:
            row += f"{times['numpy']/times['numba']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=7)
    bench(ap.parse_args().repeat)
