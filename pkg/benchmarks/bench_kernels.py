"""Compare the compiled and numpy ray-casting backends.

Casts a fan of rays from a point in the builtin office against its walls and
reports the best-of-repeats wall time per call for each available backend,
plus a full grid evaluation under each.

    python3 benchmarks/bench_kernels.py [--rays 4096] [--repeats 5]
"""
import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from bwp import kernels
from bwp.geometry import TOL, make_office_layout

GRID_SNIPPET = """
import time
from bwp import kernels
from bwp.analysis import layout_grid_eval
from bwp.geometry import make_office_layout
from bwp.propagation import Scenario
t = time.perf_counter()
layout_grid_eval(make_office_layout(), Scenario(frequency_ghz=28.0), 5.0)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def ray_fan(n: int) -> np.ndarray:
    theta = (np.arange(n) + 0.5) * (2 * math.pi / n)
    return np.column_stack((np.cos(theta), np.sin(theta)))


def bench_calls(n_rays: int, repeats: int) -> dict[str, dict[str, float]]:
    walls = make_office_layout().wall_array
    dirs = ray_fan(n_rays)
    limits = np.full(n_rays, 200.0)
    out = {}
    for name, mod in kernels.BACKENDS.items():
        timing = {}
        for fn in ("first_hits", "all_hits"):
            call = getattr(mod, fn)
            timer = timeit.Timer(lambda: call(55.3, 7.1, dirs, limits, walls, TOL))
            loops, _ = timer.autorange()
            timing[fn] = min(timer.repeat(repeats, loops)) / loops
        out[name] = timing
    return out


def bench_grid() -> dict[str, float]:
    out = {}
    for name in kernels.BACKENDS:
        env = dict(os.environ, BWP_KERNELS=name)
        res = subprocess.run([sys.executable, "-c", GRID_SNIPPET], env=env, check=True,
                             capture_output=True, text=True)
        backend, seconds = res.stdout.split()
        out[backend] = float(seconds)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=4096)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--no-grid", action="store_true", help="skip the full grid evaluation")
    args = ap.parse_args(argv)

    print(f"backends available: {', '.join(kernels.BACKENDS)}; active: {kernels.BACKEND}")
    calls = bench_calls(args.rays, args.repeats)
    print(f"\n{args.rays} rays x {len(make_office_layout().walls)} walls")
    print(f"{'backend':<8} {'first_hits ms':>14} {'all_hits ms':>12}")
    for name, t in calls.items():
        print(f"{name:<8} {1e3 * t['first_hits']:>14.3f} {1e3 * t['all_hits']:>12.3f}")
    if {"python", "cython"} <= calls.keys():
        for fn in ("first_hits", "all_hits"):
            print(f"speed-up {fn}: {calls['python'][fn] / calls['cython'][fn]:.1f}x")
    if not args.no_grid:
        grid = bench_grid()
        print("\noffice grid at 5 m cells, 28 GHz")
        for name, sec in grid.items():
            print(f"{name:<8} {sec:>8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
