#!/usr/bin/env python3
"""Benchmark the compiled PSOR sweep kernel against the numpy fallback.

Solves identical problems with both backends, checks the iterates agree to
round-off, and reports wall time per solve and per million node-sweeps.

Usage: python benchmarks/bench_psor.py [--sizes 65,129,257] [--repeats 3]
"""

import argparse
import time

import numpy as np

from thinobstacle.grid import Grid
from thinobstacle.kernels import HAVE_COMPILED, available_backends
from thinobstacle.presets import boundary_data, coefficient_preset
from thinobstacle.solver import SignoriniProblem, assemble, solve_psor


def bench_case(n, m, backend, repeats, op_cache):
    key = (n, m)
    if key not in op_cache:
        A = coefficient_preset("var_diag:1", n)
        bd = boundary_data("humps", n, dimple=1.2)
        prob = SignoriniProblem(A, Grid(n, m), bd)
        op_cache[key] = (prob, assemble(prob))
    prob, op = op_cache[key]
    best, sol = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        sol = solve_psor(prob, tol=1e-10, relax=1.9, backend=backend,
                         warm_start=False, op=op)
        best = min(best, time.perf_counter() - t0)
    sweeps = sol.iterations * len(op.interior) / 1e6
    return sol, best, sweeps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="65,129,257")
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"backends available: {available_backends()}")
    if not HAVE_COMPILED:
        print("compiled kernel not built; benchmarking numpy only")

    op_cache = {}
    header = f"{'m':>5} {'backend':>9} {'iters':>7} {'time [s]':>9} " \
             f"{'Msweeps/s':>10}"
    print(header)
    print("-" * len(header))
    for m in sizes:
        results = {}
        for backend in available_backends():
            sol, t, msweeps = bench_case(args.n, m, backend, args.repeats,
                                         op_cache)
            results[backend] = sol
            print(f"{m:>5} {backend:>9} {sol.iterations:>7} {t:>9.3f} "
                  f"{msweeps / t:>10.2f}")
        if len(results) == 2:
            diff = float(np.abs(results["compiled"].field.values
                                - results["numpy"].field.values).max())
            status = "OK" if diff < 1e-10 else "MISMATCH"
            print(f"      backend agreement: max |diff| = {diff:.2e} "
                  f"[{status}]")
            assert diff < 1e-10


if __name__ == "__main__":
    main()
