"""Time the compiled and numpy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--sizes 1000 2000 5000] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from hart import _pykernels

try:
    from hart import _ckernels
except ImportError:
    _ckernels = None


def sample(m, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.1, 4.0, m)
    x = s * rng.standard_normal(m) + (rng.random(m) < 0.1) * 2.0
    return x, s, rng.random(m)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 5000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the numpy backend is timed")

    print(f"{'kernel':<14}{'m':>7}{'numpy s':>11}{'cython s':>11}{'speedup':>9}{'max rel':>11}")
    for m in args.sizes:
        x, s, w = sample(m)
        cases = {
            "bivariate": lambda k: k.bivariate_kde_parts(x, s, x, s, w, 0.3, 0.2, True),
            "univariate": lambda k: k.gaussian_kde(x / s, x / s, 0.3),
        }
        for name, call in cases.items():
            t_py = best_of(lambda: call(_pykernels), args.repeat)
            if _ckernels is None:
                print(f"{name:<14}{m:>7}{t_py:>11.4f}")
                continue
            t_c = best_of(lambda: call(_ckernels), args.repeat)
            a, b = np.atleast_2d(call(_pykernels)), np.atleast_2d(call(_ckernels))
            rel = np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300))
            print(f"{name:<14}{m:>7}{t_py:>11.4f}{t_c:>11.4f}{t_py / t_c:>9.1f}{rel:>11.2e}")


if __name__ == "__main__":
    main()
