"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on inputs taken from a real computation (cube measure
supports, period tables) and the results of both backends are compared
before any timing is reported.
"""

import argparse
import time

import numpy as np

from cubeavg import kernels
from cubeavg.averages import period_tables
from cubeavg.measures import build_mu_star
from cubeavg.random_instances import grid_system

CASES = [
    ("Z_6 x Z_6, d=2", (6, 6), [(1, 0), (0, 1)]),
    ("Z_4^3, d=3", (4, 4, 4), [(1, 0, 0), (0, 1, 0), (0, 0, 1)]),
    ("Z_12 x Z_10, d=3", (12, 10), [(1, 0), (0, 1), (1, 1)]),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"compiled backend available: {kernels.BACKEND == 'cython'}")
    print(f"{'case':<20} {'kernel':<18} {'size':>9} {'cython s':>10} {'python s':>10} {'speedup':>8}")
    for name, factors, shifts in CASES:
        s = grid_system(factors, shifts)
        n = s.size
        values = rng.integers(-4, 5, size=n).astype(np.int64)
        mu = build_mu_star(s)
        labels = np.arange(len(mu), dtype=np.int64) % 7
        tables, lengths = period_tables(s)
        masks = np.arange(1, 1 << s.d, dtype=np.int64)
        vals = rng.integers(-4, 5, size=(len(masks), n)).astype(np.int64)
        mults = rng.integers(1, 4, size=(s.d, int(lengths.max()))).astype(np.int64)
        weights = np.ones(n, dtype=np.int64)
        jobs = [
            ("tensor_cell_sums", len(mu),
             lambda b: kernels.tensor_cell_sums(mu.coords, mu.numerators, labels, 7, values, backend=b)),
            ("cube_sums", n * int(np.prod(lengths)),
             lambda b: kernels.cube_sums(tables, lengths, mults, masks, vals, backend=b)),
            ("residue_integrals", n * int(np.prod(lengths)),
             lambda b: kernels.residue_integrals(tables, lengths, masks, vals, weights, backend=b)),
        ]
        for kname, size, job in jobs:
            tc, oc = best_of(lambda: job("cython"), args.repeat)
            tp, op = best_of(lambda: job("python"), args.repeat)
            assert list(oc) == list(op), f"backends disagree on {kname}"
            print(f"{name:<20} {kname:<18} {size:>9} {tc:>10.4f} {tp:>10.4f} {tp / max(tc, 1e-9):>7.1f}x")


if __name__ == "__main__":
    main()
