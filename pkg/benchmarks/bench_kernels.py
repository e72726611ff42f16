#!/usr/bin/env python3
"""Timing comparison between the compiled kernels and the NumPy reference.

Each hot kernel runs on identical inputs through both backends and the
per-call times are printed side by side.  A full closed-loop scenario is
then timed in separate interpreters, because the backend is fixed at
import time (AERODELTA_PURE_PYTHON=1 forces the reference).

Usage: python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from aerodelta import _kernels
from aerodelta._kernels import pyref
from aerodelta.delta_arm import DeltaGeometry


def best_per_call(fn, calls, repeats=3):
    """Best-of-N total over the call list, per call, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in calls:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best / len(calls)


def qp_calls(rng, n):
    calls = []
    for _ in range(n):
        m = rng.standard_normal((6, 6))
        q_mat = m.T @ m + np.diag(rng.uniform(0.1, 1.0, size=6))
        q_lin = rng.standard_normal(6) * 2.0
        lo = rng.uniform(-1.0, 0.0, size=6)
        hi = lo + rng.uniform(0.1, 2.0, size=6)
        calls.append((q_mat, q_lin, lo, hi, np.zeros(6)))
    return calls


def fk_calls(rng, geom, n):
    return [
        (geom.r_eff, geom.upper_arm, geom.forearm, rng.uniform(-1.0, 1.6, size=3))
        for _ in range(n)
    ]


def ik_calls(rng, geom, n):
    pts = []
    for _ in range(n):
        _, p = pyref.delta_fk(geom.r_eff, geom.upper_arm, geom.forearm,
                              rng.uniform(-1.0, 1.6, size=3))
        pts.append((geom.r_eff, geom.upper_arm, geom.forearm, p))
    return pts


def plant_calls(rng, geom, n):
    calls = []
    for _ in range(n):
        state = np.concatenate([
            rng.uniform(-1.0, 1.0, size=3),
            rng.uniform(-1.0, 1.0, size=1),
            rng.uniform(0.2, 1.2, size=3),
        ])
        refs = state + rng.uniform(-0.05, 0.05, size=7)
        calls.append((state, refs, 0.05, 0.02, 2.0,
                      geom.r_eff, geom.upper_arm, geom.forearm, 0.001, 5))
    return calls


def time_full_run(pure: bool) -> tuple[str, float]:
    code = (
        "import time\n"
        "from aerodelta import _kernels\n"
        "from aerodelta.harness import run_scenario\n"
        "from aerodelta.scenario import load_scenario\n"
        "sc = load_scenario('example1')\n"
        "run_scenario(sc, seed=0)\n"
        "t0 = time.perf_counter()\n"
        "run_scenario(sc, seed=0)\n"
        "print(_kernels.BACKEND, time.perf_counter() - t0)\n"
    )
    env = dict(os.environ)
    if pure:
        env["AERODELTA_PURE_PYTHON"] = "1"
    else:
        env.pop("AERODELTA_PURE_PYTHON", None)
    proc = subprocess.run([sys.executable, "-c", code],
                          capture_output=True, text=True, env=env)
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    backend, seconds = proc.stdout.split()
    return backend, float(seconds)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true",
                        help="fewer instances per kernel")
    args = parser.parse_args()

    n_qp = 100 if args.quick else 500
    n_kin = 1000 if args.quick else 10000
    n_plant = 1000 if args.quick else 5000

    if _kernels.BACKEND != "compiled":
        print("note: compiled backend unavailable, both columns run the "
              "NumPy reference")

    rng = np.random.default_rng(11)
    geom = DeltaGeometry()
    rows = [
        ("solve_box_qp", n_qp, qp_calls(rng, n_qp),
         _kernels.solve_box_qp, pyref.solve_box_qp),
        ("delta_fk", n_kin, fk_calls(rng, geom, n_kin),
         _kernels.delta_fk, pyref.delta_fk),
        ("delta_ik", n_kin, ik_calls(rng, geom, n_kin),
         _kernels.delta_ik, pyref.delta_ik),
        ("plant_advance", n_plant, plant_calls(rng, geom, n_plant),
         _kernels.plant_advance, pyref.plant_advance),
    ]

    print(f"{'kernel':<15}{'calls':>7}{'active':>12}{'reference':>12}"
          f"{'speedup':>9}")
    for name, n, calls, active_fn, ref_fn in rows:
        t_active = best_per_call(active_fn, calls)
        t_ref = best_per_call(ref_fn, calls)
        print(f"{name:<15}{n:>7}{t_active * 1e6:>10.1f}us"
              f"{t_ref * 1e6:>10.1f}us{t_ref / t_active:>8.1f}x")

    print()
    print("full example1 run (12 s horizon, warm interpreter, best of 1):")
    backend_a, t_a = time_full_run(pure=False)
    backend_b, t_b = time_full_run(pure=True)
    print(f"  {backend_a:<10}{t_a:>8.3f} s")
    print(f"  {backend_b:<10}{t_b:>8.3f} s")
    if backend_a != backend_b:
        print(f"  speedup {t_b / t_a:.1f}x")


if __name__ == "__main__":
    main()
