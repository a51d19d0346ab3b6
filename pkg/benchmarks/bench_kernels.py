#!/usr/bin/env python3
"""Benchmark the compiled segment kernels against the numpy fallback.

Micro benchmarks time the raw kernels; the end-to-end rows time operator
application and the adjoint on random trees by hot-swapping the kernel
bindings. Run after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from mhls import kernels
from mhls.filtration import Random, build_tree
from mhls.fractional import apply_atomic, apply_atomic_adjoint
from mhls.martingale import MartingaleSequence, SimpleFunction

KERNEL_NAMES = ("segment_sums", "expand", "weighted_means", "add_scaled_diff")


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def micro(backends):
    print("== micro: per-level segment kernels (best of 5, seconds)")
    header = f"{'kernel':<16} {'size':>9} " + " ".join(f"{n:>12}" for n in backends)
    print(header)
    rng = np.random.default_rng(0)
    for size in (1_000, 100_000, 1_000_000):
        lengths = rng.integers(1, 6, size // 3)
        bounds = np.zeros(lengths.size + 1, dtype=np.int64)
        np.cumsum(lengths, out=bounds[1:])
        n = int(bounds[-1])
        x = rng.standard_normal(n)
        w = rng.uniform(0.1, 1.0, n)
        inv = 1.0 / np.add.reduceat(w, bounds[:-1])
        vals = rng.standard_normal(lengths.size)
        out = np.zeros(n)
        cases = {
            "segment_sums": lambda mod: mod.segment_sums(x, bounds),
            "expand": lambda mod: mod.expand(vals, bounds),
            "weighted_means": lambda mod: mod.weighted_means(x, w, bounds, inv),
            "add_scaled_diff": lambda mod: mod.add_scaled_diff(out, w, x, x),
        }
        for name in KERNEL_NAMES:
            row = f"{name:<16} {n:>9}"
            for mod in backends.values():
                row += f" {timeit(lambda: cases[name](mod), 5):>12.2e}"
            print(row)


def end_to_end(backends):
    print("\n== end to end: operator application (best of 3, seconds)")
    scenarios = [
        ("deep ensemble", Random(seed=1, depth=10, max_children=3, min_ratio=0.05), 20),
        ("small trees x500", Random(seed=2, depth=5, max_children=3, min_ratio=0.1), 500),
    ]
    saved = {name: getattr(kernels, name) for name in KERNEL_NAMES}
    try:
        for label, spec, reps in scenarios:
            tree = build_tree(spec)
            rng = np.random.default_rng(3)
            f = SimpleFunction(tree, tree.depth, rng.standard_normal(tree.num_leaves))
            m = MartingaleSequence.from_terminal(f)
            row = f"{label:<18} ({tree.num_leaves} leaves)"
            results = {}
            for bname, mod in backends.items():
                for name in KERNEL_NAMES:
                    setattr(kernels, name, getattr(mod, name))

                def work():
                    for _ in range(reps):
                        apply_atomic(m, 0.5)
                        apply_atomic_adjoint(f, 0.5)

                results[bname] = timeit(work, 3)
                row += f" {bname}={results[bname]:.3f}s"
            if len(results) == 2:
                py, cy = results.get("python"), results.get("cython")
                if py and cy:
                    row += f"  speedup x{py / cy:.2f}"
            print(row)
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def main():
    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)} (active: {kernels.backend_name()})")
    micro(backends)
    end_to_end(backends)


if __name__ == "__main__":
    main()
