"""Time every hot kernel under the compiled and the numpy backend.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints one row per kernel: best-of-repeat seconds for each backend and the
speedup.  Results also checked for agreement.
"""
import argparse
import time

import numpy as np

from ilwlab import _kernels_py

try:
    from ilwlab import _kernels as _compiled
except ImportError:
    _compiled = None


def cases():
    rng = np.random.default_rng(0)
    grid = rng.normal(size=(2000, 256))
    xa = rng.normal(size=(1500, 4))
    wa = np.full(1500, 1 / 1500)
    inv = np.concatenate([[0.0], 1.0 / np.arange(1, 17)])
    c32 = rng.normal(size=32) + 1j * rng.normal(size=32)
    om32 = np.arange(1, 33.0) ** 2
    c8 = rng.normal(size=(200, 8)) + 1j * rng.normal(size=(200, 8))
    om8 = np.arange(1, 9.0) ** 2
    dts = rng.uniform(2e-3, 4e-3, 200)
    return [
        ("mittag_leffler_sum (1e6 terms)", lambda k: k.mittag_leffler_sum(1.0, 3.0, 1_000_000)),
        ("hermite k=6 (512k points)", lambda k: k.hermite(6, grid.ravel(), 1.3)),
        ("hermite_row_mean k=4", lambda k: k.hermite_row_mean(4, grid, 1.3)),
        ("energy_cross 1500x1500", lambda k: k.energy_cross(xa, wa, xa, wa)),
        ("chaos_convolution k=3 N=16", lambda k: k.chaos_convolution(inv, 3, 2)),
        ("ifrk4_advance N=32, 2000 steps", lambda k: k.ifrk4_advance(c32, om32, 3, 1.5, 1e-4, 2000, 256)),
        ("ifrk4_advance_rows 200x8 to T=1", lambda k: k.ifrk4_advance_rows(c8, om8, 3, 1.2, 1.0, dts, 64)[0]),
    ]


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled kernels not built; only the numpy backend is available")
    print(f"{'kernel':36s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases():
        tp, outp = best(lambda: fn(_kernels_py), args.repeat)
        if _compiled is None:
            print(f"{name:36s} {tp:10.4f} {'-':>10s}")
            continue
        tc, outc = best(lambda: fn(_compiled), args.repeat)
        diff = float(np.max(np.abs(np.asarray(outp) - np.asarray(outc))))
        print(f"{name:36s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
