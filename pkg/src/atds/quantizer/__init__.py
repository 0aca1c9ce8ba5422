"""Deterministic k-means codebook training and frame quantization.

The nearest-centroid kernel is compiled (Cython) when available; set
ATDS_KERNEL=py or ATDS_KERNEL=cy to force a backend.
"""

import os

from atds.quantizer import _kernel_py

_forced = os.environ.get("ATDS_KERNEL", "").lower()
if _forced == "py":
    _kernel = _kernel_py
    KERNEL_BACKEND = "py"
else:
    try:
        from atds.quantizer import _kernel_cy as _kernel

        KERNEL_BACKEND = "cy"
    except ImportError:
        if _forced == "cy":
            raise
        _kernel = _kernel_py
        KERNEL_BACKEND = "py"

nearest_centroids = _kernel.nearest_centroids

from atds.quantizer.kmeans import (  # noqa: E402
    ClusterSequence,
    Codebook,
    assign,
    inertia,
    load_codebook,
    save_codebook,
    train_codebook,
)

__all__ = [
    "Codebook",
    "ClusterSequence",
    "train_codebook",
    "assign",
    "inertia",
    "save_codebook",
    "load_codebook",
    "nearest_centroids",
    "KERNEL_BACKEND",
]
