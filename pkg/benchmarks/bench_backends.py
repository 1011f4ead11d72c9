"""Time integrator steps on the compiled and pure-Python backends.

    python benchmarks/bench_backends.py [--n 129] [--steps 2000]
"""
import argparse
import math
import time

import numpy as np

from oncovirus import GridSpec, HollingII, Logistic, ModelParams, build_kernel, init_state, step
from oncovirus import _backend
from oncovirus.kernel import age_ladder


def time_backend(name, n, steps, repeat):
    p = ModelParams(0.1, 1.0, 0.5, 50.0, 0.25, Logistic(1.0, 1.0), HollingII(4.0, 5.0))
    g = GridSpec(math.pi, n)
    dt = p.tau / 32
    k = build_kernel(g, p.d2, p.alpha, age_ladder(p.tau, dt))
    best = math.inf
    final = None
    for _ in range(repeat):
        s = init_state(p, g, k, lambda th, x: 0.5 + 0.3 * np.cos(x), 0.2, dt, backend=_backend.load(name))
        t0 = time.perf_counter()
        for _ in range(steps):
            step(s)
        best = min(best, time.perf_counter() - t0)
        final = s.U.copy()
    return best, final


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=129)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    results = {}
    for name in _backend.available():
        results[name] = time_backend(name, args.n, args.steps, args.repeat)
        sec = results[name][0]
        print(f"{name:>7}: {sec:.3f} s for {args.steps} steps ({1e6 * sec / args.steps:.1f} us/step), n={args.n}")
    if len(results) == 2:
        (tc, uc), (tp, up) = results["cython"], results["python"]
        print(f"speedup: x{tp / tc:.2f}; max |U_cython - U_python| = {np.max(np.abs(uc - up)):.2e}")
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
