"""Benchmark: compiled kernels against the numpy fallback.

Three workloads bracket the real usage: a large batched curvature sweep
(grid estimation), single-point radial-state calls in a tight loop (the
per-seed flow integrator), and a mid-size batch (the flow ensemble).
"""

from __future__ import annotations

import math
import time

import numpy as np

from ._kernels import _numpy as np_backend

try:
    from ._kernels import _core as c_backend
except ImportError:
    c_backend = None


def _sample_points(n, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 2 * math.pi, n)
    v = rng.uniform(-3.0, 3.0, n)
    return np.column_stack([u, v])


def _time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmark(points: int = 200_000, repeat: int = 3, single: int = 4000):
    code = np_backend.SURFACE_CODES["catenoid"]
    params = np.zeros(0)
    center = np.array([1.0, 0.0, 0.0])
    big = _sample_points(points)
    mid = _sample_points(256, seed=1)
    singles = _sample_points(single, seed=2)

    backends = [("python", np_backend)]
    if c_backend is not None:
        backends.append(("compiled", c_backend))
    else:
        print("compiled backend not built; showing the numpy fallback only")

    workloads = [
        (f"curvature sweep, batch {points}",
         lambda be: be.surface_fundamental(code, params, big)),
        ("flow ensemble state, batch 256 x 200 calls",
         lambda be: [be.surface_radial_state(code, params, center, mid)
                     for _ in range(200)]),
        (f"single-point radial state x {single}",
         lambda be: [be.surface_radial_state(code, params, center,
                                             singles[i:i + 1])
                     for i in range(len(singles))]),
    ]

    print(f"{'workload':48s}" + "".join(f"{name:>12s}" for name, _ in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for label, work in workloads:
        row = f"{label:48s}"
        times = []
        for _, be in backends:
            dt = _time(lambda be=be: work(be), repeat)
            times.append(dt)
            row += f"{dt * 1e3:10.1f}ms"
        if len(times) == 2:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)

    # correctness cross-check while both backends are loaded
    if c_backend is not None:
        for kernel in ("surface_fundamental",):
            a = np_backend.surface_fundamental(code, params, mid)
            b = c_backend.surface_fundamental(code, params, mid)
            worst = max(float(np.max(np.abs(a[k] - b[k])))
                        for k in ("norm_hs", "mean_norm", "det_g"))
            print(f"backend agreement ({kernel}): max |diff| = {worst:.2e}")
        ra = np_backend.surface_radial_state(code, params, center, mid)
        rb = c_backend.surface_radial_state(code, params, center, mid)
        worst = max(float(np.max(np.abs(x - y))) for x, y in zip(ra, rb))
        print(f"backend agreement (surface_radial_state): "
              f"max |diff| = {worst:.2e}")


if __name__ == "__main__":
    run_benchmark()
