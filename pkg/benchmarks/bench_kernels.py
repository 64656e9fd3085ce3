"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from sparsevar._kernels import _pykernels
from sparsevar.core import PenaltyStructure, lag_regression
from sparsevar.penalties import build_partition
from sparsevar.solvers import Problem

try:
    from sparsevar._kernels import _ckernels
except ImportError:
    _ckernels = None


def lasso_case(k=8, p=4, T=200, seed=0):
    rng = np.random.default_rng(seed)
    reg = lag_regression(rng.standard_normal((T, k)), k, p)
    part = build_partition(PenaltyStructure("Basic"), k, 0, p)
    prob = Problem(reg, part)
    lam = 0.1 * np.abs(2 * prob.C).max()
    pen = np.ascontiguousarray(lam * part.l1_weights)

    def run(mod):
        w = np.zeros(part.shape)
        mod.lasso_cd_gram(prob.G, prob.C, w, pen, 10000, 1e-8)
        return w

    return run


def sweep_case(k=8, p=6, seed=0):
    rng = np.random.default_rng(seed)
    part = build_partition(PenaltyStructure("HVARELEM"), k, 0, p)
    idx, ptr = part.csr()
    v0 = rng.standard_normal(part.shape[0] * part.shape[1])
    thr = 0.3 * part.weights

    def run(mod):
        v = v0.copy()
        mod.group_sweep(v, idx, ptr, thr)
        return v

    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    for name, case in (("lasso_cd_gram k=8 p=4", lasso_case()), ("group_sweep HVARELEM k=8 p=6", sweep_case())):
        ref = case(_pykernels)
        times = {}
        for label, mod in backends:
            out = case(mod)
            err = float(np.max(np.abs(out - ref)))
            times[label] = min(timeit.repeat(lambda: case(mod), number=1, repeat=args.repeat))
            print(f"{name:32s} {label:7s} {times[label] * 1e3:9.3f} ms  max|diff|={err:.1e}")
        if "cython" in times:
            print(f"{'':32s} speedup {times['python'] / times['cython']:8.1f}x")


if __name__ == "__main__":
    main()
