"""Synthetic generators and dataset I/O round trips."""

import numpy as np
import pytest

from nysc.datagen import (
    BLOB_TRUNCATION,
    DEFAULT_BLOB_STDDEV,
    DataMatrix,
    SyntheticSpec,
    default_blob_centers,
    make_blobs,
    make_circles,
    make_dataset,
    make_moons,
    read_csv,
    read_libsvm,
    write_csv,
)
from nysc.embedding import RankPolicy, determine_rank
from nysc.errors import InvalidArgumentError
from nysc.kernel import KernelConfig, build_nystrom_factors, sample_landmarks_uniform
from nysc.linalg import sym_evd


class TestDataMatrix:
    def test_basic_properties(self):
        data = DataMatrix(samples=np.zeros((4, 2)), labels=np.array([0, 1, 1, 0]))
        assert (data.n, data.d, data.k) == (4, 2, 2)

    def test_no_labels_means_unknown_k(self):
        assert DataMatrix(samples=np.zeros((3, 1))).k is None

    def test_rejects_bad_shapes_and_values(self):
        with pytest.raises(InvalidArgumentError):
            DataMatrix(samples=np.zeros(3))
        with pytest.raises(InvalidArgumentError):
            DataMatrix(samples=np.array([[np.nan]]))
        with pytest.raises(InvalidArgumentError):
            DataMatrix(samples=np.zeros((3, 1)), labels=np.array([0, 1]))
        with pytest.raises(InvalidArgumentError):
            DataMatrix(samples=np.zeros((2, 1)), labels=np.array([-1, 0]))


class TestMoons:
    def test_deterministic_and_balanced(self):
        a = make_moons(101, seed=3)
        b = make_moons(101, seed=3)
        assert np.array_equal(a.samples, b.samples)
        counts = np.bincount(a.labels)
        assert abs(counts[0] - counts[1]) <= 1

    def test_noise_free_points_sit_on_half_circles(self):
        data = make_moons(40, noise=0.0)
        upper = data.samples[data.labels == 0]
        np.testing.assert_allclose(np.linalg.norm(upper, axis=1), 1.0, atol=1e-12)
        lower = data.samples[data.labels == 1]
        np.testing.assert_allclose(
            np.linalg.norm(lower - [1.0, 0.5], axis=1), 1.0, atol=1e-12
        )

    def test_rejects_negative_noise(self):
        with pytest.raises(InvalidArgumentError):
            make_moons(10, noise=-0.1)


class TestCircles:
    def test_radii_follow_factor(self):
        data = make_circles(60, noise=0.0, factor=0.4)
        outer = np.linalg.norm(data.samples[data.labels == 0], axis=1)
        inner = np.linalg.norm(data.samples[data.labels == 1], axis=1)
        np.testing.assert_allclose(outer, 1.0, atol=1e-12)
        np.testing.assert_allclose(inner, 0.4, atol=1e-12)

    def test_factor_must_be_a_ratio(self):
        for bad in (0.0, 1.0, 1.5):
            with pytest.raises(InvalidArgumentError):
                make_circles(10, factor=bad)

    def test_balanced_classes(self):
        counts = np.bincount(make_circles(75).labels)
        assert abs(counts[0] - counts[1]) <= 1


class TestBlobs:
    def test_deterministic_and_near_balanced(self):
        a = make_blobs(100, k=3, seed=1)
        b = make_blobs(100, k=3, seed=1)
        assert np.array_equal(a.samples, b.samples)
        counts = np.bincount(a.labels)
        assert counts.max() - counts.min() <= 1

    def test_cluster_means_near_centers(self):
        n, k = 9000, 3
        data = make_blobs(n, k=k, seed=2)
        centers = default_blob_centers(k)
        for c in range(k):
            mean = data.samples[data.labels == c].mean(axis=0)
            assert np.linalg.norm(mean - centers[c]) < 5 * DEFAULT_BLOB_STDDEV / np.sqrt(n / k)

    def test_offsets_bounded_by_truncation_radius(self):
        data = make_blobs(5000, k=3, stddev=0.5, seed=3)
        centers = default_blob_centers(3)
        for c in range(3):
            radii = np.linalg.norm(data.samples[data.labels == c] - centers[c], axis=1)
            assert radii.max() <= BLOB_TRUNCATION * 0.5 + 1e-12

    def test_default_centers_well_separated(self):
        for k in (2, 3, 5, 8):
            centers = default_blob_centers(k)
            for i in range(k):
                for j in range(i + 1, k):
                    assert np.linalg.norm(centers[i] - centers[j]) >= 2.0 - 1e-12

    def test_custom_centers_and_validation(self):
        centers = np.array([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]])
        data = make_blobs(50, k=2, centers=centers, stddev=0.1, seed=4)
        assert data.d == 3
        with pytest.raises(InvalidArgumentError):
            make_blobs(50, k=3, centers=centers)
        with pytest.raises(InvalidArgumentError):
            make_blobs(50, k=2, stddev=0.0)

    def test_default_spread_keeps_landmark_spectrum_slow(self):
        # the whole point of the default blobs: at m=40 landmarks the
        # relative-eigenvalue rule keeps nearly the full spectrum
        n, m = 10_000, 40
        config = KernelConfig(0.2)
        policy = RankPolicy(gamma=1e-2, min_rank=3)
        ranks = []
        for data_seed in (3, 5, 7, 11, 13):
            data = make_blobs(n, k=3, seed=data_seed)
            for trial in range(10):
                idx = sample_landmarks_uniform(n, m, 1000 + 31 * data_seed + trial)
                factors = build_nystrom_factors(data.samples, idx, config)
                ranks.append(determine_rank(sym_evd(factors.inner), policy))
        assert np.mean(ranks) == pytest.approx(37.9, abs=3.0)


class TestMakeDataset:
    def test_dispatch(self):
        assert make_dataset(SyntheticSpec("moons", 30)).n == 30
        assert make_dataset(SyntheticSpec("circles", 30)).n == 30
        assert make_dataset(SyntheticSpec("blobs", 30, k=4)).k == 4

    def test_unknown_shape(self):
        with pytest.raises(InvalidArgumentError):
            make_dataset(SyntheticSpec("swirl", 30))


class TestCsvRoundTrip:
    def test_bitwise_round_trip(self, tmp_path):
        data = make_blobs(37, k=3, seed=5)
        path = tmp_path / "blobs.csv"
        write_csv(path, data)
        back = read_csv(path)
        assert np.array_equal(back.samples, data.samples)
        assert np.array_equal(back.labels, data.labels)

    def test_unlabeled_round_trip(self, tmp_path):
        data = DataMatrix(samples=np.random.default_rng(6).normal(size=(8, 3)))
        path = tmp_path / "plain.csv"
        write_csv(path, data)
        back = read_csv(path)
        assert np.array_equal(back.samples, data.samples)
        assert back.labels is None

    def test_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x0,x1,label\n1.0,2.0,0\noops,3.0,1\n")
        with pytest.raises(InvalidArgumentError, match="bad.csv:3"):
            read_csv(path)
        path.write_text("x0,x1,label\n1.0,2.0\n")
        with pytest.raises(InvalidArgumentError, match="expected 3 fields"):
            read_csv(path)
        path.write_text("")
        with pytest.raises(InvalidArgumentError, match="empty"):
            read_csv(path)


class TestLibsvmReader:
    def test_hand_written_file(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text(
            "# a comment line\n"
            "2 1:0.5 3:1.5\n"
            "1 qid:4 2:-1.0   # trailing comment\n"
            "\n"
            "2 1:2.0 2:3.0 3:4.0\n"
        )
        data = read_libsvm(path)
        np.testing.assert_allclose(
            data.samples,
            [[0.5, 0.0, 1.5], [0.0, -1.0, 0.0], [2.0, 3.0, 4.0]],
        )
        # labels {1, 2} remap to {0, 1} in sorted order
        assert data.labels.tolist() == [1, 0, 1]

    def test_bad_tokens_are_located(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 1:0.5\n2 nonsense\n")
        with pytest.raises(InvalidArgumentError, match="bad.txt:2"):
            read_libsvm(path)
        path.write_text("1 0:2.0\n")
        with pytest.raises(InvalidArgumentError, match="one-based"):
            read_libsvm(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# nothing\n")
        with pytest.raises(InvalidArgumentError, match="no data rows"):
            read_libsvm(path)
