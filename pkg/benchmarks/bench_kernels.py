"""Time the compiled kernels against the numpy fallback on the same inputs.

    python benchmarks/bench_kernels.py [--sizes 100 400 1600] [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from geoporous import kernels
from geoporous import spaces as sp


def inputs(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    V = rng.uniform(-1, 1, (n, 2))
    E = sp.euclidean(2)
    dx, dy = sp.pairwise(E, X), sp.pairwise(E, V)
    vals, w = rng.normal(size=(n, 4)), rng.uniform(0, 1, (n, 4))
    return dx, dy, vals, w


def cases(mod, dx, dy, vals, w):
    return {
        "max_pair_quotient": lambda: mod.max_pair_quotient(dx, dy, 0.0),
        "row_max_quotient": lambda: mod.row_max_quotient(dx, dy, 0.5, 0.0),
        "directed_hausdorff": lambda: mod.directed_hausdorff(dx),
        "weighted_inf": lambda: mod.weighted_inf(vals, w, dx),
    }


def best_time(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    names = sorted(backends)
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(names)}")
    header = f"{'kernel':20s} {'n':>6s} " + " ".join(f"{b + ' [ms]':>14s}" for b in names)
    if "cython" in backends:
        header += f" {'speedup':>8s}"
    print(header)
    for n in args.sizes:
        data = inputs(n)
        timings = {b: {k: best_time(fn, args.repeat) for k, fn in cases(backends[b], *data).items()} for b in names}
        for kernel in timings[names[0]]:
            row = f"{kernel:20s} {n:6d} " + " ".join(f"{1e3 * timings[b][kernel]:14.3f}" for b in names)
            if "cython" in backends:
                row += f" {timings['numpy'][kernel] / timings['cython'][kernel]:7.1f}x"
            print(row)


if __name__ == "__main__":
    main()
