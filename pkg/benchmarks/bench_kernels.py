"""Time the compiled and numpy shift-energy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--shifts N] [--grid M] [--repeat R]
"""

import argparse
import time

import numpy as np

from treetrace import kernels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--shifts", type=int, default=20_000)
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = {
        "1d": (rng.standard_normal(args.grid**2), rng.uniform(-1, 1, (args.shifts, 1))),
        "2d": (rng.standard_normal((args.grid, args.grid)), rng.uniform(-1, 1, (args.shifts, 2))),
    }
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'case':6s} {'backend':8s} {'seconds':>10s} {'shifts/s':>12s}")
    for name, (v, z) in cases.items():
        ref = None
        for b in backends:
            t = best_of(lambda: kernels.shift_energy(v, z, backend=b), args.repeat)
            out = kernels.shift_energy(v, z, backend=b)
            ref = out if ref is None else ref
            assert np.allclose(out, ref, rtol=1e-12, atol=1e-14)
            print(f"{name:6s} {b:8s} {t:10.4f} {args.shifts / t:12.0f}")
    v = rng.standard_normal(4096)
    for b in backends:
        t = best_of(lambda: kernels.gagliardo_1d(v, 0.25, backend=b), args.repeat)
        print(f"{'pairs':6s} {b:8s} {t:10.4f} {'':>12s}")


if __name__ == "__main__":
    main()
