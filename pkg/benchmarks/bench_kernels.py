"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--threads N]

Every case also checks that both backends return identical arrays.
"""

import argparse
import os
import time

import numpy as np

from bipo import _backend, builtin_cover, make_grid
from bipo.fancheck import _all_pairs, g_instance


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(threads):
    g = make_grid(-2, 2, 801)
    x = g.points
    f = x**2 / 2 + np.abs(x)
    fan = builtin_cover("quadratic_fan", {"K": 65}, make_grid(-2, 2, 161))
    F = np.ascontiguousarray(g_instance(fan, 120).values)
    pairs = _all_pairs(F.shape[0])
    alphas = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    big = builtin_cover("quadratic_fan", {"K": 257}, make_grid(-2, 2, 321))
    return [
        ("conjugate_brute n=801", lambda k: k.conjugate_brute(x, f, x, threads)),
        ("conjugate_fast n=801", lambda k: k.conjugate_fast(x, f, x)),
        ("synth_min K=257 n=321", lambda k: k.synth_min(big.phi, big.phi_star, 1e-12, threads)),
        ("fan_best K=65 all pairs", lambda k: k.fan_best(F, pairs, alphas, threads)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=_backend.num_threads())
    args = ap.parse_args()
    if "cython" not in _backend.BACKENDS:
        raise SystemExit("compiled kernels are not built; reinstall with a C compiler available")
    py, cy = _backend.BACKENDS["python"], _backend.BACKENDS["cython"]
    print(f"cpus={os.cpu_count()} threads={args.threads} repeat={args.repeat}")
    print(f"{'kernel':28s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speedup':>8s}  identical")
    for name, run in cases(args.threads):
        tp, a = _time(lambda: run(py), args.repeat)
        tc, b = _time(lambda: run(cy), args.repeat)
        same = all(np.array_equal(u, v) for u, v in zip(a, b))
        print(f"{name:28s} {tp:10.4f} {tc:11.4f} {tp / tc:8.1f}x  {same}")


if __name__ == "__main__":
    main()
