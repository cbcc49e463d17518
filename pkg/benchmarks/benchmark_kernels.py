#!/usr/bin/env python3
"""Benchmark: compiled kernel backend vs pure-numpy fallback.

Times the hot kernels on representative workloads and checks that the two
backends agree numerically. Run from the repository root:

    python benchmarks/benchmark_kernels.py [--repeats 30]
"""

import argparse
import time

import numpy as np

from rsmd._kernels import _pure

try:
    from rsmd._kernels import _fast
except ImportError:
    _fast = None


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lp_prox(backend, n=10, repeats=30):
    rng = np.random.default_rng(1)
    p = 1 + 1 / (2 * np.log(n))
    a = rng.normal(size=n)
    t = np.full(n, 1.0 / n)

    def run():
        backend.composite_prox_kernel(a, 0.8, t, p, _pure.PEN_ENTROPY, 0.1, 2.0,
                                      _pure.SET_SIMPLEX, np.zeros(n), np.zeros(n),
                                      1.0)

    return _time(run, repeats), backend.composite_prox_kernel(
        a, 0.8, t, p, _pure.PEN_ENTROPY, 0.1, 2.0,
        _pure.SET_SIMPLEX, np.zeros(n), np.zeros(n), 1.0)


def bench_l1ball_prox(backend, n=10, repeats=30):
    rng = np.random.default_rng(2)
    p = 1 + 1 / (2 * np.log(n))
    a = rng.normal(size=n) * 2
    t = np.zeros(n)

    def run():
        backend.composite_prox_kernel(a, 1.2, t, p, _pure.PEN_L1, 0.2, 2.0,
                                      _pure.SET_L1BALL, np.zeros(n), np.zeros(n),
                                      1.5)

    return _time(run, repeats), backend.composite_prox_kernel(
        a, 1.2, t, p, _pure.PEN_L1, 0.2, 2.0,
        _pure.SET_L1BALL, np.zeros(n), np.zeros(n), 1.5)


def bench_run_loop(backend, n=10, N=500, repeats=10):
    rng = np.random.default_rng(3)
    A = np.diag(rng.uniform(0.5, 2.0, n))
    b = A @ (rng.normal(size=n) * 0.3)
    W = rng.standard_t(3, size=(N, n)) * 0.3
    x0 = np.zeros(n)
    betas = np.full(N, 4.0)
    gbar = A @ x0 - b
    args = (A, b, x0, W, betas, gbar, x0, 2.0, 12.0, True,
            _pure.PEN_ZERO, 0.0, 2.0, _pure.SET_L2BALL, np.zeros(n),
            np.zeros(n), 5.0, _pure.EXTRA_NONE, None, 0.0, 1e-12, False)

    def run():
        backend.rsmd_loop_euclid(*args)

    xs, *_ = backend.rsmd_loop_euclid(*args)
    return _time(run, repeats), xs[-1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()

    if _fast is None:
        print("compiled backend not built (pip install -e . with a compiler); "
              "timing the pure backend only")
    rows = []
    for name, bench, repeats in [
        ("lp prox, entropy simplex (n=10)", bench_lp_prox, args.repeats),
        ("lp prox, l1 pen on l1 ball (n=10)", bench_l1ball_prox, args.repeats),
        ("full run loop (n=10, N=500)", bench_run_loop, max(5, args.repeats // 3)),
    ]:
        t_pure, v_pure = bench(_pure, repeats=repeats)
        if _fast is not None:
            t_fast, v_fast = bench(_fast, repeats=repeats)
            agree = float(np.max(np.abs(np.asarray(v_pure) - np.asarray(v_fast))))
            rows.append((name, t_pure, t_fast, t_pure / t_fast, agree))
        else:
            rows.append((name, t_pure, None, None, 0.0))

    print(f"{'kernel':38s} {'pure':>10s} {'cython':>10s} {'speedup':>8s} {'agree':>9s}")
    for name, tp, tf, sp, agree in rows:
        if tf is None:
            print(f"{name:38s} {tp * 1e3:9.3f}ms {'-':>10s} {'-':>8s} {'-':>9s}")
        else:
            print(f"{name:38s} {tp * 1e3:9.3f}ms {tf * 1e3:9.3f}ms {sp:7.1f}x {agree:9.1e}")


if __name__ == "__main__":
    main()
