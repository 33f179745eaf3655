"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--points N] [--steps N] [--repeat N]

Times batched expression evaluation (the zero test / residual hot path) and
batched RK4 (trajectories and section sweeps) on each available backend and
checks that both backends agree.
"""

import argparse
import time

import numpy as np

from maxvar import kernels
from maxvar import symexpr as sx
from maxvar.randgen import random_expr


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--starts", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    names = ("x1", "x2", "x3", "x4", "x5")
    rng = np.random.default_rng(0)
    progs = [kernels.compile_expr(random_expr(names, rng, max_deg=3, n_mono=5), names)
             for _ in range(10)]
    X = rng.uniform(-1, 1, (args.points, len(names)))

    state = ("x", "y", "z", "t")
    srcs = ["-y*z/6 + sin(t)/10", "2*x*z/3", "-x*y/2"]
    bundle = kernels.compile_bundle([sx.parse_expr(s, state) for s in srcs], state)
    Y0 = rng.uniform(-1, 1, (args.starts, 3))

    print(f"backends: {', '.join(kernels.BACKENDS)} (default {kernels.BACKEND})")
    results = {}
    for be in kernels.BACKENDS:
        t_eval, vals = best_of(lambda: [kernels.eval_batch(p, X, backend=be)[0] for p in progs],
                               args.repeat)
        t_rk4, (states, _) = best_of(
            lambda: kernels.rk4(bundle, Y0, 0.0, 1e-3, args.steps, backend=be), args.repeat)
        results[be] = (t_eval, t_rk4, vals, states)
        print(f"{be:>7}: eval_batch {len(progs)}x{args.points} pts {t_eval * 1e3:9.2f} ms | "
              f"rk4 {args.starts} starts x {args.steps} steps {t_rk4 * 1e3:9.2f} ms")

    if len(results) == 2:
        ce, cr, cv, cs = results["cython"]
        pe, pr, pv, ps = results["python"]
        agree = all(np.allclose(a, b, rtol=1e-12, atol=1e-12) for a, b in zip(cv, pv)) and \
            np.allclose(cs, ps, rtol=1e-12, atol=1e-12)
        print(f"speedup: eval_batch {pe / ce:.1f}x, rk4 {pr / cr:.1f}x; backends agree: {agree}")


if __name__ == "__main__":
    main()
