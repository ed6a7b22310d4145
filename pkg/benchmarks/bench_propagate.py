"""Time the contour stepper under both backends and check they agree.

    python benchmarks/bench_propagate.py [--points 40] [--repeat 3]

Each run sweeps the Floquet discriminant of 2/sin^2 x + 0.3 cos 2x over
lambda in [0.5, 100] (single thread, so only the kernel differs).
"""
import argparse
import math
import time

import numpy as np

from smero._accel import set_backend
from smero.potential import csc_squared
from smero.transfer import discriminant_sweep


def sweep(lams):
    u = csc_squared(1, 1.0, cos=[0.0, 0.3])
    rows = discriminant_sweep(u, lams, x0=math.pi / 2, r=0.2, threads=1)
    return np.array([r.delta for r in rows])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    lams = np.linspace(0.5, 100.0, args.points)

    results = {}
    for name in ("numba", "numpy"):
        prev = set_backend(name)
        try:
            sweep(lams[:2])  # compile / warm up
            best = math.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = sweep(lams)
                best = min(best, time.perf_counter() - t0)
            results[name] = (best, out)
        finally:
            set_backend(prev)

    tb, db = results["numba"]
    tn, dn = results["numpy"]
    print(f"{'backend':<8} {'best of ' + str(args.repeat):>12} {'per lambda':>12}")
    for name, (t, _) in results.items():
        print(f"{name:<8} {t:>11.3f}s {1e3 * t / len(lams):>10.2f}ms")
    print(f"speedup  {tn / tb:>11.1f}x")
    print(f"max |Delta_numba - Delta_numpy| = {np.max(np.abs(db - dn)):.2e}")


if __name__ == "__main__":
    main()
