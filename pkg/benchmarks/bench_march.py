"""Compare the compiled and pure-Python marching kernels.

Usage::

    python3 benchmarks/bench_march.py [--a 0.8] [--m 64 256] [--n-lambda 1 64 512] [--repeat 5]
"""

import argparse
import time

import numpy as np

from diracdelay import kernels, make_delay_config
from diracdelay.core import Constant, Cosine, PiecewiseFunction, PotentialPair
from diracdelay.solver import cell_samples


def _potential(a):
    p = PiecewiseFunction.from_pieces([(a, 2 * a, Constant(0.7 - 0.2j)), (2 * a, 3 * a, Cosine(0.4, 2.0, 0.3))])
    q = PiecewiseFunction.from_pieces([(1.5 * a, 3 * a, Cosine(0.5j, 1.1, 0.0))])
    return PotentialPair(p, q)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=0.8)
    ap.add_argument("--m", type=int, nargs="+", default=[64, 256])
    ap.add_argument("--n-lambda", type=int, nargs="+", default=[1, 64, 512])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        fast = kernels.get_march("cython")
    except ImportError:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return 1
    slow = kernels.get_march("python")
    cfg = make_delay_config(args.a)
    pp = _potential(cfg.a)
    print(f"{'m':>6} {'n_lambda':>9} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for m in args.m:
        d, frac, qm, qp = cell_samples(pp, cfg.a, m)
        for n in args.n_lambda:
            lams = np.linspace(-20, 20, n) + 0.3j
            tp = _best(lambda: slow(lams, m, d, frac, qm, qp), args.repeat)
            tc = _best(lambda: fast(lams, m, d, frac, qm, qp), args.repeat)
            zs, ws = slow(lams, m, d, frac, qm, qp)
            zc, wc = fast(lams, m, d, frac, qm, qp)
            diff = max(np.max(np.abs(zs - zc)), np.max(np.abs(ws - wc)))
            print(f"{m:>6} {n:>9} {1e3 * tp:>12.3f} {1e3 * tc:>12.3f} {tp / tc:>8.1f} {diff:>10.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
