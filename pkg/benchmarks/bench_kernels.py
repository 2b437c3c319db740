"""Time the compiled JSA kernel against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--points N] [--nodes M] [--repeat R]``.
The inputs mimic a 128 x 128 JSA grid with 201 quadrature nodes per row of
constant omega_s + omega_i.  Also times a full ``jsa_grid`` call on each
backend (the backend is fixed at import, so that part runs in subprocesses).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cavsfwm._kernels_py import jsa_sum as jsa_py

try:
    from cavsfwm._kernels import jsa_sum as jsa_cy
except ImportError:
    jsa_cy = None

GRID_SNIPPET = """
import time, numpy as np
from cavsfwm import CavitySpec, FiberSpec, PumpSpec, jsa_grid, kernels, phasematch_solve, tune_cavity
from cavsfwm.constants import C
from cavsfwm.spectral import centered_axis
wp = 2 * np.pi * C / 1.064e-6
f = FiberSpec(0.68e-6, 0.5, 0.01, gamma=0.1437)
ws, wi = phasematch_solve(f, wp)
cav = tune_cavity(CavitySpec.from_configuration("Csi", 0.8), f, ws, wi)
kernels.set_num_threads({threads})
a, b = centered_axis(ws, 3e11, {n}), centered_axis(wi, 3e11, {n})
p = PumpSpec(wp, 8e10)
jsa_grid(a, b, f, p, cav, None)
t = time.perf_counter(); jsa_grid(a, b, f, p, cav, None); print(time.perf_counter() - t)
"""


def inputs(points, nodes, groups, seed=0):
    rng = np.random.default_rng(seed)
    ksum = rng.normal(2e7, 50.0, (groups, nodes))
    weight = rng.random((groups, nodes))
    group = rng.integers(0, groups, points).astype(np.int_)
    ksub = ksum[group, nodes // 2] + rng.normal(0.0, 300.0, points)
    return ksum, weight, group, ksub


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def grid_time(pure, n, threads):
    env = dict(os.environ)
    if pure:
        env["CAVSFWM_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", GRID_SNIPPET.format(n=n, threads=threads)],
                         capture_output=True, text=True, env=env, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=128 * 128)
    ap.add_argument("--nodes", type=int, default=201)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--grid", type=int, default=128, help="jsa_grid size for the end-to-end timing")
    args = ap.parse_args(argv)

    ksum, weight, group, ksub = inputs(args.points, args.nodes, 2 * int(np.sqrt(args.points)))
    print(f"kernel: {args.points} points x {args.nodes} nodes, best of {args.repeat}")
    t_py = best(lambda: jsa_py(ksum, weight, group, ksub, 0.01), args.repeat)
    print(f"  python           {t_py * 1e3:9.2f} ms")
    if jsa_cy is None:
        print("  cython           not built")
        return 0
    ref = jsa_py(ksum, weight, group, ksub, 0.01)
    ncpu = os.cpu_count() or 1
    for threads in sorted({1, ncpu}):
        t = best(lambda: jsa_cy(ksum, weight, group, ksub, 0.01, threads), args.repeat)
        print(f"  cython {threads:2d} thr    {t * 1e3:9.2f} ms   speedup {t_py / t:6.1f}x")
    diff = np.max(np.abs(jsa_cy(ksum, weight, group, ksub, 0.01, 1) - ref)) / np.max(np.abs(ref))
    print(f"  max relative difference {diff:.1e}")

    print(f"jsa_grid {args.grid} x {args.grid} (Csi cavity)")
    t_py = grid_time(True, args.grid, 1)
    print(f"  python           {t_py * 1e3:9.2f} ms")
    for threads in sorted({1, ncpu}):
        t = grid_time(False, args.grid, threads)
        print(f"  cython {threads:2d} thr    {t * 1e3:9.2f} ms   speedup {t_py / t:6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
