"""Pure-numpy nearest-centroid kernel (fallback when the compiled
extension is unavailable). Same contract as _kernel_cy."""

import numpy as np

# Bound on temporary (chunk x k x dim) float64 scratch, in elements.
_SCRATCH_ELEMS = 24_000_000


def nearest_centroids(frames: np.ndarray, centroids: np.ndarray):
    """For each frame, the index of the nearest centroid (squared
    Euclidean distance, double accumulation) and that distance.

    Ties go to the lowest centroid index. Returns (int64[n], float64[n]).
    """
    n, d = frames.shape
    k = centroids.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    cent64 = centroids.astype(np.float64)
    chunk = max(1, _SCRATCH_ELEMS // max(1, k * d))
    for start in range(0, n, chunk):
        block = frames[start : start + chunk].astype(np.float64)
        diff = block[:, None, :] - cent64[None, :, :]
        d2 = np.einsum("nkd,nkd->nk", diff, diff)
        best = np.argmin(d2, axis=1)  # first occurrence = lowest index
        idx[start : start + chunk] = best
        dist[start : start + chunk] = d2[np.arange(len(best)), best]
    return idx, dist
