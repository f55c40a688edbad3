"""Seeded k-means: deterministic ties, empty-cluster repair, SSE descent."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nysc.errors import InvalidArgumentError
from nysc.kmeans import KMeansConfig, _assign, _repair_empty, kmeans, normalize_rows


def three_blobs(n_per=20, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    pts = np.concatenate([c + 0.1 * rng.normal(size=(n_per, 2)) for c in centers])
    truth = np.repeat(np.arange(3), n_per)
    return pts, truth


def sse_of(points, labels, centroids):
    diff = points - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


class TestNormalizeRows:
    def test_unit_norms(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(10, 4))
        out = normalize_rows(x)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, rtol=1e-12)

    def test_zero_rows_pass_through(self):
        x = np.array([[3.0, 4.0], [0.0, 0.0]])
        out = normalize_rows(x)
        np.testing.assert_allclose(out[0], [0.6, 0.8])
        np.testing.assert_allclose(out[1], [0.0, 0.0])

    def test_rejects_non_matrix(self):
        with pytest.raises(InvalidArgumentError):
            normalize_rows(np.zeros(5))


class TestKMeansBasics:
    def test_separable_data_recovered(self):
        pts, truth = three_blobs()
        result = kmeans(pts, 3, seed=0)
        # same partition up to label names
        assert len({(t, p) for t, p in zip(truth.tolist(), result.labels.tolist())}) == 3
        assert result.converged

    def test_deterministic_per_seed(self):
        pts, _ = three_blobs(seed=2)
        a = kmeans(pts, 3, seed=5)
        b = kmeans(pts, 3, seed=5)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.sse == b.sse

    def test_reported_sse_matches_assignment(self):
        pts, _ = three_blobs(seed=3)
        result = kmeans(pts, 3, seed=1)
        assert result.sse == pytest.approx(sse_of(pts, result.labels, result.centroids), rel=1e-12)

    def test_labels_cover_all_clusters(self):
        pts, _ = three_blobs(seed=4)
        result = kmeans(pts, 3, seed=2)
        assert set(result.labels.tolist()) == {0, 1, 2}

    def test_distance_tie_takes_lowest_index(self):
        # exact tie between two centroids resolves to the lower index
        centroids = np.array([[0.0, 0.0], [2.0, 0.0]])
        points = np.array([[1.0, 0.0], [1.0, 5.0], [3.0, 0.0]])
        labels = _assign(points, centroids)
        assert labels.tolist() == [0, 0, 1]

    def test_k_equals_n_gives_zero_sse(self):
        pts = np.arange(8.0).reshape(4, 2)
        result = kmeans(pts, 4, seed=0)
        assert result.sse == 0.0

    def test_more_clusters_than_points_rejected(self):
        with pytest.raises(InvalidArgumentError):
            kmeans(np.zeros((3, 2)), 4, seed=0)

    def test_fewer_distinct_locations_than_k_degrades_gracefully(self):
        # only two distinct locations: the third cluster necessarily ends
        # empty, but the run must converge to the zero-error partition
        pts = np.array([[0.0, 0.0]] * 5 + [[9.0, 9.0]] * 5)
        result = kmeans(pts, 3, seed=7)
        assert result.sse == 0.0
        assert result.converged
        assert result.centroids.shape == (3, 2)

    def test_empty_cluster_repair_uses_farthest_point(self):
        # force an empty cluster: two centroids coincide, so one of them
        # loses every tie; repair must move it to the farthest point
        pts = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [8.0, 8.0]])
        centroids = np.array([[0.0, 0.0], [0.0, 0.0]])
        labels = _assign(pts, centroids)
        assert set(labels.tolist()) == {0}
        repaired, changed = _repair_empty(pts, centroids.copy(), labels.copy(), 2)
        assert changed
        assert set(repaired.tolist()) == {0, 1}
        assert repaired[3] == 1

    def test_restarts_never_hurt(self):
        rng = np.random.default_rng(8)
        pts = rng.normal(size=(60, 2))
        single = kmeans(pts, 4, seed=11, config=KMeansConfig(restarts=1))
        multi = kmeans(pts, 4, seed=11, config=KMeansConfig(restarts=8))
        assert multi.sse <= single.sse + 1e-12

    def test_iterations_capped(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(200, 2))
        result = kmeans(pts, 7, seed=0, config=KMeansConfig(max_iter=3))
        assert result.iterations <= 3


class TestPlusPlusSeeding:
    def test_spread_points_preferred(self):
        # one point far from a tight clump: squared-distance weighting makes
        # it the overwhelming favorite as the second center
        pts = np.concatenate([np.zeros((50, 2)), [[100.0, 0.0]]])
        hits = 0
        trials = 400
        for seed in range(trials):
            result = kmeans(pts, 2, seed=seed, config=KMeansConfig(max_iter=1))
            # the far point ends in its own cluster iff it was picked
            if result.labels[-1] != result.labels[0]:
                hits += 1
        assert hits / trials > 0.95


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.integers(10, 40))
def test_sse_history_never_increases(seed, k, n):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3))
    result = kmeans(pts, k, seed=seed)
    hist = result.sse_history
    assert len(hist) >= 1
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
    assert result.sse == pytest.approx(hist[-1], rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_labels_always_valid(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(30, 2))
    result = kmeans(pts, 4, seed=seed)
    assert result.labels.shape == (30,)
    assert result.labels.min() >= 0 and result.labels.max() < 4
    assert np.bincount(result.labels, minlength=4).min() >= 1
