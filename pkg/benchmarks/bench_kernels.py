"""Benchmark the compiled-series evaluators: numba kernel vs numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--orders 8 12 16] [--batch 20000]

Builds the univariate d-series, compiles it, and times evaluation over a
batch of random atom-value rows with both back ends.  The numba path is
skipped when numba is unavailable or disabled via AFFINE_CF_NO_NUMBA.
"""
from __future__ import annotations

import argparse
import os
import time

import numpy as np

from affine_cf.kernels import USING_NUMBA, _eval_numpy, compile_series
from affine_cf.symalg import d_series

if USING_NUMBA:
    from affine_cf.kernels import _eval_numba


def bench(fn, values, cs, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(values, cs)
        best = min(best, time.perf_counter() - start)
    return best


def run_numpy(values, cs):
    return _eval_numpy(cs.coeffs, cs.term_off, cs.atom_idx, cs.atom_pow,
                       cs.factor_off, values)


def run_numba(values, cs):
    return _eval_numba(cs.coeffs, cs.term_off, cs.atom_idx, cs.atom_pow,
                       cs.factor_off, values)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--orders", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--batch", type=int, default=20000)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"numba available: {USING_NUMBA} "
          f"(AFFINE_CF_NO_NUMBA={os.environ.get('AFFINE_CF_NO_NUMBA', '')!r})")
    print(f"{'K':>4} {'terms':>8} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")

    for k in args.orders:
        polys = d_series(1, k)[1:]  # drop the constant d_0
        cs = compile_series(polys)
        values = (rng.standard_normal((args.batch, cs.n_atoms))
                  + 1j * rng.standard_normal((args.batch, cs.n_atoms)))
        n_terms = len(cs.coeffs)

        t_np = bench(run_numpy, values, cs)
        if USING_NUMBA:
            run_numba(values, cs)  # trigger JIT compile outside the timing
            t_nb = bench(run_numba, values, cs)
            out_np = run_numpy(values, cs)
            out_nb = run_numba(values, cs)
            worst = float(np.max(np.abs(out_np - out_nb)))
            assert worst < 1e-9, f"backend mismatch: {worst}"
            print(f"{k:>4} {n_terms:>8} {t_np * 1e3:>10.2f} "
                  f"{t_nb * 1e3:>10.2f} {t_np / t_nb:>8.2f}x")
        else:
            print(f"{k:>4} {n_terms:>8} {t_np * 1e3:>10.2f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
