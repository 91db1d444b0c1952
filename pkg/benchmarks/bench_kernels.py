"""Time the compiled energy/gradient kernel against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 20]
"""

import argparse
import time

import numpy as np

from scaling_lab import Params, _kernels_py
from scaling_lab.oracle import Grid

try:
    from scaling_lab import _kernels
except ImportError:
    _kernels = None


def bench(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=20)
    a = ap.parse_args()
    p = Params(0.5, 1e-3, 0.5, 0.5)
    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'max |dgrad|':>12}")
    for n in a.sizes:
        g = Grid(n, n)
        u = 0.2 * rng.standard_normal(g.shape(p.L))
        dx, dy = g.spacing(p.L)
        args = (u, g.nucleus_mask(p.L), dx, dy, p.theta, p.mu, p.eps, 0.01, True)
        t_py = bench(_kernels_py.energy_grad, args, a.repeat)
        if _kernels is None:
            print(f"{n:>5} {1e3 * t_py:>10.2f} {'n/a':>10}")
            continue
        t_cy = bench(_kernels.energy_grad, args, a.repeat)
        diff = np.max(np.abs(_kernels_py.energy_grad(*args)[4] - _kernels.energy_grad(*args)[4]))
        print(f"{n:>5} {1e3 * t_py:>10.2f} {1e3 * t_cy:>10.2f} {t_py / t_cy:>8.1f} {diff:>12.2e}")


if __name__ == "__main__":
    main()
