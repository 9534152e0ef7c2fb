"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--rows N] [--repeat R] [--n N --m M]
"""
import argparse
import timeit

import numpy as np

from htype import _pykernels, kernels
from htype.clifford import build_generators

try:
    from htype import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--m", type=int, default=1)
    args = ap.parse_args(argv)

    mats = build_generators(args.n, args.m).mats
    rng = np.random.default_rng(0)
    z1, z2 = rng.normal(size=(2, args.rows, 2 * args.n))
    w1, w2 = rng.normal(size=(2, args.rows, args.m))
    cases = {
        "group_mul": lambda impl: kernels.group_mul(z1, w1, z2, w2, mats, impl=impl),
        "log_bubble": lambda impl: kernels.log_bubble(z1, w1, 1.0, impl=impl),
        "hnorm": lambda impl: kernels.hnorm(z1, w1, impl=impl),
        "omega": lambda impl: kernels.omega(z1, w1, mats, impl=impl),
    }
    print(f"rows={args.rows} (n,m)=({args.n},{args.m}) best of {args.repeat}")
    print(f"{'kernel':<12}{'python ms':>12}{'cython ms':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in cases.items():
        tp = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<12}{tp:12.2f}{'n/a':>12}{'n/a':>10}{'n/a':>12}")
            continue
        tc = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        a, b = fn(_pykernels), fn(_ckernels)
        a, b = (np.concatenate([x.ravel() for x in a]) if isinstance(a, tuple) else a,
                np.concatenate([x.ravel() for x in b]) if isinstance(b, tuple) else b)
        diff = float(np.max(np.abs(a - b)))
        print(f"{name:<12}{tp:12.2f}{tc:12.2f}{tp / tc:10.2f}{diff:12.2e}")


if __name__ == "__main__":
    main()
