"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` time per call for each kernel and backend, and
the speedup of the compiled version.
"""

import argparse
import timeit

import numpy as np

from pctate import _pykernels as py

try:
    from pctate import _ckernels as cy
except ImportError:
    cy = None


def cases(rng):
    n, k, c = 20_000, 12, 500
    X = rng.normal(size=(n, k))
    e = rng.normal(size=n)
    f = rng.normal(size=n)
    codes = rng.integers(0, c, n)
    # 0F1 arguments as they arise for rho_d: a = m/2, b = -(m/2) var / 2
    hyp = [(m / 2, -m / 2 * v / 2) for m, v in ((18, 0.02), (1000, 0.004), (10**6, 1e-5))]
    return {
        "hyp0f1 (3 calls)": lambda impl: [impl.hyp0f1(a, b) for a, b in hyp],
        "hc0_meat": lambda impl: impl.hc0_meat(X, e),
        "hc0_meat cross": lambda impl: impl.hc0_meat(X, e, f),
        "cluster_meat": lambda impl: impl.cluster_meat(X, e, codes, c),
        "demean": lambda impl: impl.demean(X, codes, c),
    }


def best(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if cy is None:
        print("compiled extension not built; only the numpy fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'numpy (us)':>12} {'cython (us)':>12} {'speedup':>8}")
    for name, call in cases(rng).items():
        t_py = best(lambda: call(py), args.repeat)
        if cy is None:
            print(f"{name:<18} {t_py * 1e6:12.1f} {'-':>12} {'-':>8}")
            continue
        t_cy = best(lambda: call(cy), args.repeat)
        print(f"{name:<18} {t_py * 1e6:12.1f} {t_cy * 1e6:12.1f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
