# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled nearest-centroid kernel: the O(n * k * dim) hot loop of
k-means training and corpus quantization."""

import numpy as np

cimport numpy as cnp


def nearest_centroids(cnp.ndarray[cnp.float32_t, ndim=2] frames,
                      cnp.ndarray[cnp.float32_t, ndim=2] centroids):
    """Same contract as the numpy fallback: (int64 indices, float64
    squared distances), ties to the lowest centroid index."""
    cdef Py_ssize_t n = frames.shape[0]
    cdef Py_ssize_t d = frames.shape[1]
    cdef Py_ssize_t k = centroids.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist = np.empty(n, dtype=np.float64)
    cdef cnp.float32_t[:, ::1] f = np.ascontiguousarray(frames)
    cdef cnp.float32_t[:, ::1] c = np.ascontiguousarray(centroids)
    cdef cnp.int64_t[::1] iv = idx
    cdef cnp.float64_t[::1] dv = dist
    cdef Py_ssize_t i, j, t, best
    cdef double acc, diff, best_d
    with nogil:
        for i in range(n):
            best = 0
            best_d = 0.0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = <double>f[i, t] - <double>c[j, t]
                    acc += diff * diff
                if j == 0 or acc < best_d:
                    best_d = acc
                    best = j
            iv[i] = best
            dv[i] = best_d
    return idx, dist
