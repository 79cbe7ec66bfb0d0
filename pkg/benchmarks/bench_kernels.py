"""Time the compiled RK4 kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--steps 20000]

Both backends integrate identical problems; the script also reports the
largest state difference between them so a speedup never hides a mismatch.
"""

import argparse
import time

import numpy as np

from netdecide.graph import build_all_to_all, build_explicit
from netdecide.kernels import available_backends


def five_node():
    a = np.zeros((5, 5))
    a[1, 0] = a[2, 1] = a[3, 2] = a[0, 3] = 1.0
    a[0, 2] = a[2, 0] = 1.0
    a[4, 3] = a[2, 4] = 0.5
    a[3, 2] += 0.5
    return build_explicit(a)


def cases(steps):
    rng = np.random.default_rng(0)
    for n in (10, 100):
        g = build_all_to_all(n)
        x0 = rng.normal(0, 0.5, n)
        yield (f"network N={n}", "rk4_network",
               (g.adjacency, g.in_degrees, np.full(n, 1.5), np.zeros(n), x0, 1e-3, steps, 100))
    g = build_all_to_all(10)
    z0 = np.append(rng.normal(0, 1e-3, 10), 0.5)
    yield ("uniform loop N=10", "rk4_closed_loop_uniform",
           (g.adjacency, g.in_degrees, z0, 1e-2, 1.0, 1e-2, steps, 100))
    g = five_node()
    x0 = rng.normal(0, 0.1, 5)
    z0 = np.concatenate([x0, x0, np.full(5, 0.5)])
    yield ("general loop N=5", "rk4_closed_loop_general",
           (g.adjacency, g.in_degrees, z0, 5e-2, 2.0, 1e-2, steps, 100))


def best_of(fn, args, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args(argv)

    backends = available_backends()
    names = list(backends)
    print(f"backends: {', '.join(names)}; {args.steps} RK4 steps per run, best of {args.repeat}")
    print(f"{'case':<20}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}{'max diff':>12}")
    for label, kernel, kargs in cases(args.steps):
        times, finals = {}, {}
        for name in names:
            t, res = best_of(getattr(backends[name], kernel), kargs, args.repeat)
            times[name], finals[name] = t, res[1]
        row = f"{label:<20}" + "".join(f"{1e3 * times[n]:>16.2f}" for n in names)
        if "cython" in times:
            diff = float(np.max(np.abs(finals["cython"] - finals["python"])))
            row += f"{times['python'] / times['cython']:>9.1f}x{diff:>12.1e}"
        print(row)


if __name__ == "__main__":
    main()
