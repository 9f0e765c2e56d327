"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--states 200000] [--repeat 5]

Reports the best of ``--repeat`` runs for a batched forward-kinematics call
and for one workspace scan on a reduced grid. The first numba call is timed
separately so JIT compilation does not pollute the steady-state figure.
"""
import argparse
import time

import numpy as np

from catr import kernels
from catr._accel import HAS_NUMBA
from catr.config import RobotConfig
from catr.multiseg import workspace_axes


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def scan(axes, robot, use_numba):
    n = axes[0].size
    g = kernels.ScanGrid(robot.max_reach, 2.0)
    kernels.run_scan(axes, 0.0, robot.segment_table, g, 0, n, False, use_numba=use_numba)
    g.finish_first_pass()
    kernels.run_scan(axes, 0.0, robot.segment_table, g, 0, n, True, use_numba=use_numba)
    return g


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--grid", default="21,24,6,21,24")
    args = ap.parse_args()

    robot = RobotConfig().robot()
    lo, hi = robot.bounds
    A = lo + np.random.default_rng(0).random((args.states, 6)) * (hi - lo)
    axes = workspace_axes(robot, tuple(int(v) for v in args.grid.split(",")))
    seg = robot.segment_table

    rows = [("fk_batch", "numpy", best_of(lambda: kernels.fk_batch_numpy(A, seg), args.repeat))]
    rows.append(("scan", "numpy", best_of(lambda: scan(axes, robot, False), args.repeat)))
    if HAS_NUMBA:
        t0 = time.perf_counter()
        kernels.fk_batch_numba(A[:2], seg)
        scan(tuple(a[:2] for a in axes), robot, True)
        print(f"numba first-call compile: {time.perf_counter() - t0:.2f} s")
        rows.insert(1, ("fk_batch", "numba", best_of(lambda: kernels.fk_batch_numba(A, seg), args.repeat)))
        rows.append(("scan", "numba", best_of(lambda: scan(axes, robot, True), args.repeat)))
        p1, _ = kernels.fk_batch_numpy(A, seg)
        p2, _ = kernels.fk_batch_numba(A, seg)
        print(f"fk_batch max |numba - numpy|: {np.abs(p1 - p2).max():.1e} mm")
    else:
        print("numba not installed: numpy timings only")

    samples = int(np.prod([a.size for a in axes]))
    print(f"{'kernel':10s} {'backend':8s} {'best (s)':>10s} {'per item (us)':>14s}")
    for name, backend, t in rows:
        n = args.states if name == "fk_batch" else samples
        print(f"{name:10s} {backend:8s} {t:10.4f} {1e6 * t / n:14.3f}")


if __name__ == "__main__":
    main()
