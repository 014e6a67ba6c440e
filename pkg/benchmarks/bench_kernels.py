"""Time the compiled and numpy backends on the built-in scenarios.

Usage: ``python3 benchmarks/bench_kernels.py [--steps N] [--cells N]``.
Reports milliseconds per Heun step and the largest state difference
between the two backends after the same number of steps.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from baroflux.harness.build import build_problem, initial_state
from baroflux.harness.scenarios import get_scenario
from baroflux.solver import COMPILED_AVAILABLE
from baroflux.solver.run import run_steps

SCENARIOS = ("closed-box-gravity", "closed-box-gravity-1d", "channel-inflow", "channel-inflow-2d",
             "rotating-square")


def time_backend(problem, backend, n_steps, repeats=3):
    disc = problem.discretization(backend)
    state0 = initial_state(problem, disc)
    run_steps(disc, state0, 5)  # warm-up
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        state, _, _ = run_steps(disc, state0, n_steps)
        best = min(best, time.perf_counter() - t0)
    return 1e3 * best / n_steps, state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--cells", type=int, default=None, help="cells per axis (default: scenario value)")
    args = ap.parse_args(argv)
    if not COMPILED_AVAILABLE:
        print("compiled kernels not built; only the numpy backend is timed")
    print(f"{'scenario':24s} {'cells':>10s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name in SCENARIOS:
        cfg = get_scenario(name)
        if args.cells:
            cfg = cfg.with_updates(grid__cells=[args.cells] * cfg.dim)
        problem = build_problem(cfg)
        cells = "x".join(map(str, problem.grid.cells))
        py_ms, py_state = time_backend(problem, "python", args.steps)
        if COMPILED_AVAILABLE:
            c_ms, c_state = time_backend(problem, "compiled", args.steps)
            diff = max(np.max(np.abs(c_state.rho - py_state.rho)), np.max(np.abs(c_state.m - py_state.m)))
            print(f"{name:24s} {cells:>10s} {py_ms:10.3f} {c_ms:12.3f} {py_ms / c_ms:8.1f} {diff:10.2e}")
        else:
            print(f"{name:24s} {cells:>10s} {py_ms:10.3f} {'-':>12s} {'-':>8s} {'-':>10s}")


if __name__ == "__main__":
    main()
