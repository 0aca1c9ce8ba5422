"""Lloyd's k-means with seeded k-means++ initialization.

Every source of randomness is the repo's SplitMix64 generator, so training
is bit-reproducible given (frames, k, seed, max_iters, rel_tol).
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from atds.errors import FormatError, ValidationError
from atds.ioutil import atomic_write_bytes
from atds.rng import SplitMix64

ATCB_MAGIC = b"ATCB"
ATCB_VERSION = 1
_HEADER = struct.Struct("<4sIIIQd")

DEFAULT_MAX_ITERS = 100
DEFAULT_REL_TOL = 1e-6


@dataclass(frozen=True)
class Codebook:
    k: int
    dim: int
    centroids: np.ndarray  # k x dim float32
    seed: int
    inertia: float
    iteration_inertias: tuple[float, ...] = ()

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        cent = np.ascontiguousarray(self.centroids, dtype=np.float32)
        if cent.shape != (self.k, self.dim):
            raise ValidationError(
                f"centroids shape {cent.shape} != ({self.k}, {self.dim})"
            )
        if not np.all(np.isfinite(cent)):
            raise ValidationError("centroids contain non-finite values")
        object.__setattr__(self, "centroids", cent)


@dataclass(frozen=True)
class ClusterSequence:
    utt_id: str
    indices: np.ndarray  # int64


def _check_frames(frames: np.ndarray, dim: int | None = None) -> np.ndarray:
    frames = np.ascontiguousarray(frames, dtype=np.float32)
    if frames.ndim != 2:
        raise ValidationError(f"frames must be 2-D, got shape {frames.shape}")
    if not np.all(np.isfinite(frames)):
        raise ValidationError("frames contain non-finite values")
    if dim is not None and frames.shape[1] != dim:
        raise ValidationError(
            f"frame dim {frames.shape[1]} does not match codebook dim {dim}"
        )
    return frames


def _distances_to(frames: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    diff = frames.astype(np.float64) - centroid.astype(np.float64)
    return np.einsum("nd,nd->n", diff, diff)


def _kmeans_plus_plus(frames: np.ndarray, k: int, rng: SplitMix64) -> np.ndarray:
    m = frames.shape[0]
    chosen = np.empty((k, frames.shape[1]), dtype=np.float32)
    first = rng.next_below(m)
    chosen[0] = frames[first]
    closest = _distances_to(frames, chosen[0])
    for j in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            # All remaining mass at already-chosen points; reuse the first.
            pick = first
        else:
            r = rng.next_double() * total
            cumulative = np.cumsum(closest)
            pick = int(np.searchsorted(cumulative, r, side="right"))
            pick = min(pick, m - 1)
        chosen[j] = frames[pick]
        closest = np.minimum(closest, _distances_to(frames, chosen[j]))
    return chosen


def train_codebook(
    frames: np.ndarray,
    k: int,
    seed: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    rel_tol: float = DEFAULT_REL_TOL,
    standardize: bool = False,
) -> Codebook:
    """k-means++ init then Lloyd iterations until the relative inertia
    improvement drops below rel_tol or max_iters is reached.

    With standardize=True, clustering runs on per-dimension standardized
    frames and the centroids are mapped back to the raw space.
    """
    from atds.quantizer import nearest_centroids

    frames = _check_frames(frames)
    m, dim = frames.shape
    if k < 1:
        raise ValidationError("k must be >= 1")
    if m < k:
        raise ValidationError(f"need at least k={k} frames, got {m}")
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    if not rel_tol > 0:
        raise ValidationError("rel_tol must be > 0")

    mean = std = None
    if standardize:
        mean = frames.mean(axis=0, dtype=np.float64)
        std = frames.std(axis=0, dtype=np.float64)
        std[std == 0.0] = 1.0
        frames = ((frames.astype(np.float64) - mean) / std).astype(np.float32)

    rng = SplitMix64(seed)
    centroids = _kmeans_plus_plus(frames, k, rng)

    trace: list[float] = []
    prev = None
    converged = False
    for _ in range(max_iters):
        idx, dists = nearest_centroids(frames, centroids)
        inertia_now = float(dists.sum())
        trace.append(inertia_now)
        if prev is not None and (prev == 0.0 or prev - inertia_now < rel_tol * prev):
            converged = True
            break
        prev = inertia_now

        counts = np.bincount(idx, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if len(empties) > 0:
            # Move each empty centroid onto the frame currently farthest
            # from its assigned centroid (deterministic order).
            order = np.argsort(-dists, kind="stable")
            centroids = centroids.copy()
            for e, frame_i in zip(empties, order):
                centroids[e] = frames[frame_i]
                idx[frame_i] = e
                dists[frame_i] = 0.0
            counts = np.bincount(idx, minlength=k)
        sums = np.zeros((k, dim), dtype=np.float64)
        np.add.at(sums, idx, frames.astype(np.float64))
        centroids = (sums / counts[:, None]).astype(np.float32)

    if not converged:
        _, dists = nearest_centroids(frames, centroids)
        inertia_now = float(dists.sum())
        trace.append(inertia_now)

    if standardize:
        centroids = (centroids.astype(np.float64) * std + mean).astype(np.float32)

    return Codebook(
        k=k,
        dim=dim,
        centroids=centroids,
        seed=seed,
        inertia=trace[-1],
        iteration_inertias=tuple(trace),
    )


def assign(codebook: Codebook, frames: np.ndarray, utt_id: str = "") -> ClusterSequence:
    """Nearest centroid per frame; ties go to the lowest centroid index."""
    from atds.quantizer import nearest_centroids

    frames = _check_frames(frames, codebook.dim)
    idx, _ = nearest_centroids(frames, codebook.centroids)
    return ClusterSequence(utt_id=utt_id, indices=idx)


def inertia(codebook: Codebook, frames: np.ndarray) -> float:
    """Sum of squared distances to assigned centroids, double accumulation."""
    from atds.quantizer import nearest_centroids

    frames = _check_frames(frames, codebook.dim)
    _, dists = nearest_centroids(frames, codebook.centroids)
    return float(dists.sum())


def save_codebook(codebook: Codebook, path: str | Path) -> None:
    header = _HEADER.pack(
        ATCB_MAGIC,
        ATCB_VERSION,
        codebook.k,
        codebook.dim,
        codebook.seed,
        codebook.inertia,
    )
    payload = np.ascontiguousarray(codebook.centroids, dtype="<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def load_codebook(path: str | Path) -> Codebook:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, k, dim, seed, final_inertia = _HEADER.unpack_from(raw)
    if magic != ATCB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != ATCB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    payload = raw[_HEADER.size :]
    if len(payload) != k * dim * 4:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {k * dim * 4}")
    centroids = np.frombuffer(payload, dtype="<f4").reshape(k, dim).copy()
    return Codebook(k=k, dim=dim, centroids=centroids, seed=seed, inertia=final_inertia)
