"""Compare the compiled and pure-numpy nearest-centroid kernels.

Usage: python3 benchmarks/bench_kernels.py [n_frames] [k] [dim]
"""

import sys
import time

import numpy as np

from atds.quantizer import _kernel_py

try:
    from atds.quantizer import _kernel_cy
except ImportError:
    _kernel_cy = None


def bench(kernel, frames, centroids, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel.nearest_centroids(frames, centroids)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 50_000
    k = int(sys.argv[2]) if len(sys.argv) > 2 else 500
    dim = int(sys.argv[3]) if len(sys.argv) > 3 else 64
    rng = np.random.default_rng(0)
    frames = rng.standard_normal((n, dim), dtype=np.float32)
    centroids = rng.standard_normal((k, dim), dtype=np.float32)

    t_py = bench(_kernel_py, frames, centroids)
    print(f"n={n} k={k} dim={dim}")
    print(f"numpy fallback : {t_py:8.3f} s")
    if _kernel_cy is None:
        print("compiled kernel: not built")
        return
    t_cy = bench(_kernel_cy, frames, centroids)
    print(f"compiled kernel: {t_cy:8.3f} s  ({t_py / t_cy:.2f}x vs numpy)")
    idx_py, d_py = _kernel_py.nearest_centroids(frames, centroids)
    idx_cy, d_cy = _kernel_cy.nearest_centroids(frames, centroids)
    agree = (idx_py == idx_cy).mean()
    print(f"index agreement: {agree:.6f}, max |dist diff| = "
          f"{np.abs(d_py - d_cy).max():.3e}")


if __name__ == "__main__":
    main()
