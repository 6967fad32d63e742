#!/usr/bin/env python3
"""Compare stepping backends on the workstation-scale problem.

Times full simulate() runs so projection, drift, and noise handling are all
included; the first run per backend is discarded to amortize thread-pool and
cache warm-up, which otherwise dominates short timings.
"""

import argparse
import time

import numpy as np

from bloomsim import (
    ApproxCoefficient,
    EigenBasis,
    KernelSpec,
    NoiseSpec,
    SolverConfig,
    SpatialGrid,
    available_backends,
    simulate,
)


def time_run(basis, kernel, backend, steps, repeats):
    cfg = SolverConfig(dt=1e-4, t_end=steps * 1e-4, snapshot_every=steps,
                       record_qv=False)
    coeff = ApproxCoefficient(lam=1.0, n=4)
    u0 = np.ones(basis.grid.N)
    best = float("inf")
    for r in range(repeats + 1):
        t0 = time.perf_counter()
        simulate(basis, kernel, coeff, u0, NoiseSpec(1), cfg, backend=backend)
        elapsed = time.perf_counter() - t0
        if r > 0:
            best = min(best, elapsed)
    return best / steps


def main():
    ap = argparse.ArgumentParser(description="benchmark the stepping backends")
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--J", type=int, default=128)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    grid = SpatialGrid(L=1.0, N=args.N)
    basis = EigenBasis(grid, D=1.0, J=args.J)
    kernel = KernelSpec(grid, r0=0.05, r1=0.25)
    backends = available_backends()
    print(f"N={args.N} J={args.J} steps={args.steps} backends={backends}")
    rows = {}
    for label, ker in (("kernel on", kernel), ("kernel off", None)):
        for backend in backends:
            us = time_run(basis, ker, backend, args.steps, args.repeats) * 1e6
            rows[(label, backend)] = us
            print(f"{label:10s} {backend:7s} {us:8.2f} us/step "
                  f"({1e6 / us:10,.0f} steps/s)")
    if "cython" in backends:
        for label in ("kernel on", "kernel off"):
            speedup = rows[(label, "python")] / rows[(label, "cython")]
            print(f"{label:10s} speedup cython vs python: {speedup:.1f}x")


if __name__ == "__main__":
    main()
