"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Prints one line per kernel with the best time of each backend, the speed-up
and whether both backends agree on the output.
"""

import argparse
import time

import numpy as np

from imprecise_lab import kernels
from imprecise_lab.frequency import running_mean
from imprecise_lab.schedule import parse_window


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(scale: float):
    rng = np.random.default_rng(0)
    n = int(1_000_000 * scale)
    verts = np.array([[0.4, 0.3, 0.3], [1 / 3, 0.4, 0.2666], [0.3, 0.3, 0.4]])
    pts = rng.dirichlet(np.ones(3), size=n)
    members = np.eye(3)
    idx = rng.integers(0, 3, size=n).astype(np.int64)
    avgs = running_mean(rng.random(n))
    lo = parse_window("sqrt").array(n)
    u = rng.random(n)
    cum = np.cumsum(np.array([[1 / 3, 2 / 3], [2 / 3, 1 / 3]]), axis=1)
    coin = rng.integers(0, 2, size=n).astype(np.int64)
    return {
        "polyline_distance": lambda m: m.polyline_distance(pts, verts),
        "fold_distances": lambda m: m.fold_distances(idx, np.zeros(3, dtype=np.int64), members, verts),
        "window_extrema": lambda m: m.window_extrema(avgs, lo),
        "categorical_draw": lambda m: m.categorical_draw(u, coin, cum),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=0, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled kernels unavailable; timing the fallback only")
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in impls) + f"{'speed-up':>10}{'agree':>7}")
    for name, fn in cases(args.scale).items():
        times, outs = {}, {}
        for b, mod in impls.items():
            times[b], outs[b] = best_time(lambda: fn(mod), args.repeat)
        row = f"{name:<20}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in impls)
        if "cython" in impls:
            row += f"{times['python'] / times['cython']:>9.1f}x{str(_same(outs['python'], outs['cython'])):>7}"
        print(row)


if __name__ == "__main__":
    main()
