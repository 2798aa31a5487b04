"""Compare the compiled and pure-Python kernels on the two hot paths.

    python3 benchmarks/bench_kernels.py [--repeat N]

Boundary reduction runs on Rips 2-skeleta of random point clouds; matching
runs on augmented bottleneck cost matrices of random diagrams.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from barcode_grad import _core_py
from barcode_grad.barcode_space import augmented_costs
from barcode_grad.parametrizations import rips
from barcode_grad.persistence import boundary_csc, filtration_order

try:
    from barcode_grad import _core
except ImportError:
    _core = None


def reduction_case(n_points: int, rng):
    F = rips(n_points, 2, max_dim=2)
    f = F.value(rng.normal(size=2 * n_points))
    indptr, indices = boundary_csc(F.complex, filtration_order(f))
    return len(F.complex), (indptr, indices, len(F.complex))


def matching_case(k: int, rng):
    def pts(n):
        b = rng.uniform(0, 1, n)
        return np.column_stack([b, b + rng.uniform(0, 1, n)])

    C = np.ascontiguousarray(augmented_costs(pts(k), pts(k)))
    eps = float(np.median(C[np.isfinite(C)]))
    return 2 * k, (C, eps)


def bench(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    rows = []
    for n in (10, 20, 30):
        size, a = reduction_case(n, rng)
        rows.append(("reduce_boundary", f"{size} simplices", a, "reduce_boundary"))
    for k in (50, 200, 400):
        size, a = matching_case(k, rng)
        rows.append(("max_matching", f"{size}x{size}", a, "max_matching"))
    print(f"{'kernel':<16} {'size':>16} {'python [s]':>12} {'cython [s]':>12} {'speedup':>8}")
    for name, size, a, attr in rows:
        tp = bench(getattr(_core_py, attr), a, args.repeat)
        if _core is None:
            print(f"{name:<16} {size:>16} {tp:>12.5f} {'n/a':>12} {'n/a':>8}")
            continue
        tc = bench(getattr(_core, attr), a, args.repeat)
        print(f"{name:<16} {size:>16} {tp:>12.5f} {tc:>12.5f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
