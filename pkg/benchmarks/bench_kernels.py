"""Compare the numba kernels with their numpy fallbacks.

Run from the repo root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --suite brst --points 10

The end-to-end part launches the suite twice in subprocesses, once with
AKBRST_DISABLE_NUMBA=1, so both backends see a fresh import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from akbrst import _kernels
from akbrst.jets import get_basis


def _best_of(fn, repeat=7):
    fn()  # warmup (numba compile or cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_taylor(nvars=4, order=3, batch=(64, 4, 4)):
    basis = get_basis(nvars, order)
    rng = np.random.default_rng(0)
    a = rng.normal(size=batch + (basis.ncoef,))
    b = rng.normal(size=batch + (basis.ncoef,))
    ref = _kernels.taylor_mul_numpy(a, b, basis.ia, basis.ib, basis.starts)
    t_np = _best_of(lambda: _kernels.taylor_mul_numpy(a, b, basis.ia, basis.ib, basis.starts))
    print(f"taylor_mul  nvars={nvars} order={order} batch={batch}")
    print(f"  numpy  {t_np * 1e3:8.3f} ms")
    if _kernels.taylor_mul_numba is not None:
        got = _kernels.taylor_mul_numba(a, b, basis.ia, basis.ib, basis.ic, basis.ncoef)
        t_nb = _best_of(lambda: _kernels.taylor_mul_numba(a, b, basis.ia, basis.ib, basis.ic, basis.ncoef))
        print(f"  numba  {t_nb * 1e3:8.3f} ms   speedup {t_np / t_nb:5.1f}x   max diff {np.abs(got - ref).max():.1e}")


def bench_signs(n=20000, ngen=12):
    rng = np.random.default_rng(1)
    left = rng.integers(0, 1 << ngen, n)
    right = rng.integers(0, 1 << ngen, n)
    t_np = _best_of(lambda: _kernels.grassmann_signs_numpy(left, right))
    print(f"grassmann signs  n={n}")
    print(f"  numpy  {t_np * 1e3:8.3f} ms")
    if _kernels.HAS_NUMBA:
        t_nb = _best_of(lambda: _kernels.grassmann_signs(left, right))
        print(f"  numba  {t_nb * 1e3:8.3f} ms   speedup {t_np / t_nb:5.1f}x")


def bench_suite(manifold, suite, points):
    cmd = [sys.executable, "-m", "akbrst.cli", "verify", "--manifold", manifold, "--suite", suite,
           "--points", str(points), "--format", "json", "--out", os.devnull]
    for flag in ("0", "1"):
        env = dict(os.environ, AKBRST_DISABLE_NUMBA=flag)
        t0 = time.perf_counter()
        subprocess.run(cmd, env=env, check=False)
        label = "numpy" if flag == "1" else "numba"
        print(f"suite {suite} on {manifold} ({points} pts)  {label}: {time.perf_counter() - t0:6.2f} s")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--manifold", default="nilmanifold")
    ap.add_argument("--suite", default="appendix2")
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--skip-suite", action="store_true")
    args = ap.parse_args()
    print(f"backend: {_kernels.backend()}")
    bench_taylor()
    bench_taylor(nvars=4, order=2, batch=(16,))
    bench_signs()
    if not args.skip_suite:
        bench_suite(args.manifold, args.suite, args.points)


if __name__ == "__main__":
    main()
