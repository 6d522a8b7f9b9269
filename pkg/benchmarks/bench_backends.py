"""Compare the compiled core against the numpy fallback on the hot loops.

Usage: python benchmarks/bench_backends.py [--n 512] [--images 200]

Both backends compute identical results (asserted here); the table reports
wall time per operation and the speedup of the compiled core.
"""

import argparse
import time

import numpy as np

from ssl_kernel._accel import _pure

try:
    from ssl_kernel._accel import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_smo(n, rng):
    X = rng.normal(size=(n, 10))
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    sq = np.sum(X * X, axis=1)
    K = np.exp(-(sq[:, None] + sq[None, :] - 2 * X @ X.T) / 4.0)
    Q = np.ascontiguousarray(K * np.outer(y, y))
    args = (Q, y, 10.0, 1e-4, 200000)
    t_pure, (a_pure, it, _) = time_call(_pure.smo_solve, *args)
    row = [f"smo_solve (n={n}, {it} iters)", t_pure, None]
    if _core is not None:
        t_core, (a_core, _, _) = time_call(_core.smo_solve, *args)
        assert np.array_equal(a_pure, np.asarray(a_core))
        row[2] = t_core
    return row


def bench_blur(n_images, rng):
    from ssl_kernel.data import gaussian_blur
    import ssl_kernel._accel as accel

    images = rng.uniform(size=(n_images, 784))

    def run(backend):
        saved = accel.convolve_rows
        accel.convolve_rows = backend.convolve_rows
        try:
            start = time.perf_counter()
            out = [gaussian_blur(img, 2.0) for img in images]
            return time.perf_counter() - start, np.asarray(out)
        finally:
            accel.convolve_rows = saved

    t_pure, out_pure = run(_pure)
    row = [f"gaussian_blur (28x28 x {n_images})", t_pure, None]
    if _core is not None:
        t_core, out_core = run(_core)
        assert np.array_equal(out_pure, out_core)
        row[2] = t_core
    return row


def bench_warp(n_images, rng):
    images = [np.ascontiguousarray(rng.uniform(size=(28, 28))) for _ in range(n_images)]
    coeffs = (1.05, -0.08, 1.3, 0.08, 1.05, -0.9)

    def run(backend):
        start = time.perf_counter()
        out = [backend.warp_bilinear(img, coeffs) for img in images]
        return time.perf_counter() - start, np.asarray(out)

    t_pure, out_pure = run(_pure)
    row = [f"warp_bilinear (28x28 x {n_images})", t_pure, None]
    if _core is not None:
        t_core, out_core = run(_core)
        assert np.array_equal(out_pure, out_core)
        row[2] = t_core
    return row


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=512, help="SMO problem size")
    parser.add_argument("--images", type=int, default=200, help="image count")
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    rows = [
        bench_smo(args.n, rng),
        bench_blur(args.images, rng),
        bench_warp(args.images * 10, rng),
    ]
    print(f"{'operation':38s} {'pure':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, t_pure, t_core in rows:
        if t_core is None:
            print(f"{name:38s} {t_pure * 1e3:9.1f}ms {'---':>10s} {'---':>8s}")
        else:
            print(
                f"{name:38s} {t_pure * 1e3:9.1f}ms {t_core * 1e3:9.1f}ms "
                f"{t_pure / t_core:7.1f}x"
            )
    if _core is None:
        print("compiled core not built; run `python setup.py build_ext --inplace`")


if __name__ == "__main__":
    main()
