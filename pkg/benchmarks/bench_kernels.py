#!/usr/bin/env python3
"""Benchmark the compiled stepping kernel against the pure-Python fallback.

Runs the same fixed-step integrations through both backends and reports
steps/second.  Usage:

    python benchmarks/bench_kernels.py [--steps N] [--repeats R]
"""

import argparse
import time

import numpy as np

from pdflow import _kernels_py
from pdflow.problem_model import QuadraticProgramSpec
from pdflow.problems import interval_qp_spec

try:
    from pdflow import _kernels
except ImportError:
    _kernels = None


def random_qp(n, m, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    P = M @ M.T / n + 0.5 * np.eye(n)
    A = np.empty((m, n, n))
    for i in range(m):
        Mi = rng.standard_normal((n, n))
        A[i] = Mi @ Mi.T / n
    return QuadraticProgramSpec(
        P=P,
        q=rng.standard_normal(n),
        c=0.0,
        A=A,
        b=rng.standard_normal((m, n)),
        d=-np.abs(rng.standard_normal(m)) - 0.5,
    )


def bench(kernel, spec, scheme, n_steps, repeats):
    n, m = spec.n, spec.m
    args = (
        spec.P, spec.q, spec.A, spec.b, spec.d,
        np.zeros(n), np.zeros(m),
        1e-3, n_steps, n_steps,  # record only endpoints
        scheme, np.ones(n), np.ones(m), 0.0, 1e12,
    )
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel.run_quadratic(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    cases = [
        ("1-d demo (n=1, m=1)", interval_qp_spec()),
        ("random QP (n=10, m=4)", random_qp(10, 4, seed=1)),
        ("random QP (n=50, m=10)", random_qp(50, 10, seed=2)),
    ]
    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    else:
        print("compiled kernel not available; benchmarking fallback only\n")

    for scheme_name, scheme in [("euler", 0), ("rk4", 1)]:
        print(f"== scheme: {scheme_name}, {args.steps} steps ==")
        for label, spec in cases:
            line = [f"{label:24s}"]
            times = {}
            for bname, impl in backends:
                t = bench(impl, spec, scheme, args.steps, args.repeats)
                times[bname] = t
                line.append(f"{bname}: {args.steps / t / 1e6:8.2f} Msteps/s")
            if "cython" in times:
                line.append(f"speedup: {times['python'] / times['cython']:.1f}x")
            print("  ".join(line))
        print()


if __name__ == "__main__":
    main()
