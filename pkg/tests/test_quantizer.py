import numpy as np
import pytest

from atds.errors import FormatError, ValidationError
from atds.quantizer import (
    assign,
    inertia,
    load_codebook,
    save_codebook,
    train_codebook,
)
from atds.quantizer import _kernel_py

try:
    from atds.quantizer import _kernel_cy
except ImportError:
    _kernel_cy = None


# --- independent oracles -------------------------------------------------


def brute_force_assign(frames, centroids):
    """Exhaustive nearest-neighbor scan, lowest index on ties."""
    out = []
    for x in frames.astype(np.float64):
        best, best_d = 0, None
        for j, c in enumerate(centroids.astype(np.float64)):
            d = float(((x - c) ** 2).sum())
            if best_d is None or d < best_d:
                best, best_d = j, d
        out.append(best)
    return np.array(out)


def oracle_lloyd(frames, k, rng, iters=100):
    """Plain restartable Lloyd, independent of the package implementation."""
    frames = frames.astype(np.float64)
    centroids = frames[rng.choice(len(frames), size=k, replace=False)]
    for _ in range(iters):
        d2 = ((frames[:, None, :] - centroids[None]) ** 2).sum(-1)
        labels = d2.argmin(1)
        new = np.array(
            [
                frames[labels == j].mean(0) if (labels == j).any() else centroids[j]
                for j in range(k)
            ]
        )
        if np.allclose(new, centroids, atol=0, rtol=0):
            break
        centroids = new
    d2 = ((frames[:, None, :] - centroids[None]) ** 2).sum(-1)
    return centroids, float(d2.min(1).sum())


def oracle_best_of_restarts(frames, k, restarts=50, seed=0):
    rng = np.random.RandomState(seed)
    best_inertia, best_centroids = None, None
    for _ in range(restarts):
        centroids, obj = oracle_lloyd(frames, k, rng)
        if best_inertia is None or obj < best_inertia:
            best_inertia, best_centroids = obj, centroids
    return best_centroids, best_inertia


def two_blobs(seed, n=200, offset=10.0, sigma=0.5):
    rng = np.random.RandomState(seed)
    a = rng.randn(n // 2, 2) * sigma
    b = rng.randn(n // 2, 2) * sigma + offset
    return np.vstack([a, b]).astype(np.float32)


# --- training ------------------------------------------------------------


class TestTrainCodebook:
    def test_exact_cover_four_corners(self):
        pts = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.float32)
        cb = train_codebook(pts, k=4, seed=3)
        assert cb.inertia == 0.0
        got = sorted(map(tuple, cb.centroids.tolist()))
        assert got == sorted(map(tuple, pts.tolist()))

    def test_k1_is_mean(self):
        rng = np.random.RandomState(5)
        pts = rng.randn(40, 3).astype(np.float32)
        cb = train_codebook(pts, k=1, seed=0)
        mean = pts.astype(np.float64).mean(0)
        np.testing.assert_allclose(cb.centroids[0], mean, atol=1e-5)
        expected = float(((pts.astype(np.float64) - mean) ** 2).sum())
        assert cb.inertia == pytest.approx(expected, rel=1e-6)

    def test_two_blobs_vs_restart_oracle(self):
        pts = two_blobs(seed=11)
        cb = train_codebook(pts, k=2, seed=1)
        _, oracle_inertia = oracle_best_of_restarts(pts, 2, restarts=50, seed=99)
        assert cb.inertia == pytest.approx(oracle_inertia, rel=1e-9)
        blob_means = [
            pts[:100].astype(np.float64).mean(0),
            pts[100:].astype(np.float64).mean(0),
        ]
        for mean in blob_means:
            dists = np.linalg.norm(cb.centroids - mean, axis=1)
            assert dists.min() < 0.3

    def test_monotone_inertia_trace(self):
        for seed in range(5):
            pts = np.random.RandomState(seed).randn(120, 4).astype(np.float32)
            cb = train_codebook(pts, k=6, seed=seed)
            trace = cb.iteration_inertias
            assert all(a >= b for a, b in zip(trace, trace[1:]))

    def test_final_at_most_init_inertia(self):
        # small instances: only the init-bound is guaranteed, not global opt
        for seed in range(10):
            pts = np.random.RandomState(seed).randn(12, 2).astype(np.float32)
            cb = train_codebook(pts, k=3, seed=seed)
            assert cb.inertia <= cb.iteration_inertias[0] + 1e-12

    def test_centroids_are_cluster_means_at_convergence(self):
        pts = np.random.RandomState(2).randn(300, 3).astype(np.float32)
        cb = train_codebook(pts, k=5, seed=4, rel_tol=1e-12, max_iters=500)
        labels = assign(cb, pts).indices
        for j in range(5):
            members = pts[labels == j].astype(np.float64)
            if len(members):
                np.testing.assert_allclose(
                    cb.centroids[j], members.mean(0), atol=1e-6
                )

    def test_bit_identical_reruns(self):
        pts = np.random.RandomState(7).randn(150, 6).astype(np.float32)
        a = train_codebook(pts, k=8, seed=123)
        b = train_codebook(pts, k=8, seed=123)
        assert a.centroids.tobytes() == b.centroids.tobytes()
        assert a.inertia == b.inertia

    def test_errors(self):
        pts = np.zeros((3, 2), dtype=np.float32)
        with pytest.raises(ValidationError):
            train_codebook(pts, k=4, seed=0)  # M < k
        with pytest.raises(ValidationError):
            train_codebook(pts, k=0, seed=0)
        bad = pts.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValidationError):
            train_codebook(bad, k=1, seed=0)

    def test_standardize_flag_runs(self):
        pts = np.random.RandomState(3).randn(60, 4).astype(np.float32) * [1, 10, 100, 1]
        cb = train_codebook(pts, k=3, seed=0, standardize=True)
        assert np.isfinite(cb.centroids).all()


# --- assignment ----------------------------------------------------------


class TestAssign:
    def test_frame_equal_to_centroid(self):
        rng = np.random.RandomState(0)
        pts = rng.randn(20, 3).astype(np.float32)
        cb = train_codebook(pts, k=10, seed=0, max_iters=1)
        frame = cb.centroids[7:8]
        assert assign(cb, frame).indices[0] == 7

    def test_tie_goes_to_lower_index(self):
        from atds.quantizer import Codebook

        centroids = np.zeros((6, 1), dtype=np.float32)
        centroids[:, 0] = [9, 9, -1.0, 9, 9, 1.0]
        cb = Codebook(k=6, dim=1, centroids=centroids, seed=0, inertia=0.0)
        # frame at 0.0 is equidistant from centroids 2 and 5
        assert assign(cb, np.zeros((1, 1), dtype=np.float32)).indices[0] == 2

    def test_matches_brute_force_scan(self):
        rng = np.random.RandomState(42)
        pts = rng.randn(60, 5).astype(np.float32)
        cb = train_codebook(pts, k=10, seed=8)
        frames = rng.randn(100, 5).astype(np.float32)
        got = assign(cb, frames).indices
        np.testing.assert_array_equal(got, brute_force_assign(frames, cb.centroids))

    def test_permutation_equivariance(self):
        rng = np.random.RandomState(1)
        pts = rng.randn(50, 4).astype(np.float32)
        cb = train_codebook(pts, k=5, seed=2)
        frames = rng.randn(30, 4).astype(np.float32)
        perm = rng.permutation(30)
        base = assign(cb, frames).indices
        np.testing.assert_array_equal(assign(cb, frames[perm]).indices, base[perm])

    def test_dimension_mismatch(self):
        pts = np.zeros((5, 3), dtype=np.float32)
        cb = train_codebook(np.random.RandomState(0).randn(9, 2).astype(np.float32), 2, 0)
        with pytest.raises(ValidationError):
            assign(cb, pts)


class TestInertia:
    def test_zero_when_frames_equal_centroids(self):
        pts = np.array([[0, 0], [2, 2]], dtype=np.float32)
        cb = train_codebook(pts, k=2, seed=0)
        assert inertia(cb, pts) == 0.0

    def test_single_frame_distance(self):
        pts = np.array([[0.0, 0.0], [10.0, 0.0]], dtype=np.float32)
        cb = train_codebook(pts, k=2, seed=0)
        assert inertia(cb, np.array([[2.0, 0.0]], dtype=np.float32)) == pytest.approx(4.0)

    def test_matches_independent_summation(self):
        rng = np.random.RandomState(9)
        pts = rng.randn(80, 4).astype(np.float32)
        cb = train_codebook(pts, k=7, seed=1)
        frames = rng.randn(200, 4).astype(np.float32)
        labels = brute_force_assign(frames, cb.centroids)
        expected = sum(
            float(
                (
                    (frames[i].astype(np.float64) - cb.centroids[labels[i]].astype(np.float64))
                    ** 2
                ).sum()
            )
            for i in range(len(frames))
        )
        assert inertia(cb, frames) == pytest.approx(expected, rel=1e-9)


# --- kernels agree -------------------------------------------------------


@pytest.mark.skipif(_kernel_cy is None, reason="compiled kernel not built")
def test_kernel_backends_agree():
    rng = np.random.RandomState(17)
    frames = rng.randn(500, 8).astype(np.float32)
    centroids = rng.randn(20, 8).astype(np.float32)
    idx_py, d_py = _kernel_py.nearest_centroids(frames, centroids)
    idx_cy, d_cy = _kernel_cy.nearest_centroids(frames, centroids)
    np.testing.assert_array_equal(idx_py, idx_cy)
    np.testing.assert_allclose(d_py, d_cy, rtol=1e-12)


# --- codebook file -------------------------------------------------------


class TestCodebookFile:
    def test_roundtrip(self, tmp_path):
        pts = np.random.RandomState(4).randn(30, 3).astype(np.float32)
        cb = train_codebook(pts, k=4, seed=11)
        path = tmp_path / "cb.atcb"
        save_codebook(cb, path)
        back = load_codebook(path)
        assert back.k == 4 and back.dim == 3 and back.seed == 11
        assert back.centroids.tobytes() == cb.centroids.tobytes()
        assert back.inertia == cb.inertia

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.atcb"
        path.write_bytes(b"NOPE" + b"\x00" * 28)
        with pytest.raises(FormatError, match="magic"):
            load_codebook(path)
