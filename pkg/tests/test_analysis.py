"""Truncation-identity and degree-perturbation checks against dense oracles."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from nysc.analysis import (
    PerturbationBaseline,
    perturbation_baseline,
    perturbation_report,
    sweep_gamma,
    theorem1_reports,
    verify_theorem1,
)
from nysc.datagen import make_blobs
from nysc.errors import InvalidArgumentError
from nysc.kernel import (
    KernelConfig,
    build_dense_kernel,
    build_nystrom_factors,
    nystrom_reconstruct,
    sample_landmarks_uniform,
)


def small_kernel(n=40, seed=0, sigma=1.0):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(n, 2))
    return build_dense_kernel(data, KernelConfig(sigma)).matrix


def dense_truncation_error(kernel, indices, l):
    """Oracle: C (W^+ - [W]_l^+) C^T assembled with plain dense algebra."""
    cross = kernel[:, indices]
    w = kernel[np.ix_(indices, indices)]
    values, vectors = np.linalg.eigh(w)
    values, vectors = values[::-1], vectors[:, ::-1]
    pinv_full = (vectors / values) @ vectors.T
    pinv_l = (vectors[:, :l] / values[:l]) @ vectors[:, :l].T
    return cross @ (pinv_full - pinv_l) @ cross.T


class TestTruncationIdentity:
    def test_error_norm_matches_dense_oracle(self):
        kernel = small_kernel()
        indices = np.arange(0, 40, 5)  # 8 well-spread landmarks
        for l in (1, 3, 6):
            report = verify_theorem1(kernel, indices, l)
            oracle = dense_truncation_error(kernel, indices, l)
            expected = np.linalg.norm(oracle, 2) / np.linalg.norm(kernel, 2)
            assert report.normalized_error == pytest.approx(expected, rel=1e-8)

    def test_identity_against_projector_oracle(self):
        # both routes of the identity, assembled densely: the truncation
        # error must equal K^{1/2} (P_F - P_{F,l}) K^{1/2}
        kernel = small_kernel(seed=1)
        indices = np.arange(0, 40, 5)
        root = scipy.linalg.sqrtm(kernel).real
        f = root[:, indices]
        u, _, _ = np.linalg.svd(f, full_matrices=False)
        for l in (2, 5):
            lhs = dense_truncation_error(kernel, indices, l)
            proj_gap = u @ u.T - u[:, :l] @ u[:, :l].T
            rhs = root @ proj_gap @ root
            gap = np.linalg.norm(lhs - rhs, 2) / np.linalg.norm(kernel, 2)
            assert gap <= 1e-8
            report = verify_theorem1(kernel, indices, l)
            assert report.identity_gap <= 1e-8

    def test_all_ranks_covered_and_bounded(self):
        kernel = small_kernel(seed=2)
        indices = np.arange(0, 40, 4)  # m = 10
        reports = theorem1_reports(kernel, indices)
        assert [r.l for r in reports] == list(range(1, 11))
        errors = [r.normalized_error for r in reports]
        for report in reports:
            assert report.identity_gap <= 1e-8
            assert report.normalized_error <= 1.0 + 1e-8
        # retaining more of the spectrum can only shrink the error
        assert all(a >= b - 1e-12 for a, b in zip(errors, errors[1:]))

    def test_full_rank_truncation_is_exact(self):
        kernel = small_kernel(seed=3)
        indices = np.arange(0, 40, 5)
        report = verify_theorem1(kernel, indices, len(indices))
        assert report.retained_rank == len(indices)
        assert report.normalized_error == 0.0
        assert report.identity_gap == 0.0

    def test_shared_root_reuse_matches_fresh_run(self):
        from nysc.linalg import psd_sqrt, spectral_norm

        kernel = small_kernel(seed=4)
        indices = np.arange(0, 40, 5)
        fresh = verify_theorem1(kernel, indices, 3)
        shared = verify_theorem1(kernel, indices, 3,
                                 psd_root=psd_sqrt(kernel),
                                 kernel_norm=spectral_norm(kernel))
        assert shared == fresh

    def test_l_validation(self):
        kernel = small_kernel(seed=5)
        indices = np.arange(0, 40, 5)
        for bad in (0, len(indices) + 1):
            with pytest.raises(InvalidArgumentError):
                verify_theorem1(kernel, indices, bad)
        with pytest.raises(InvalidArgumentError):
            verify_theorem1(kernel, np.array([0, 0, 3]), 1)
        with pytest.raises(InvalidArgumentError):
            verify_theorem1(kernel[:5], np.array([0]), 1)


class TestPerturbationReport:
    def setup_method(self):
        self.kernel = small_kernel(n=30, seed=6, sigma=1.5)
        rng = np.random.default_rng(7)
        noise = rng.normal(scale=1e-3, size=(30, 30))
        self.kernel_hat = self.kernel + 0.5 * (noise + noise.T)

    def test_fields_match_dense_oracle(self):
        report = perturbation_report(self.kernel, self.kernel_hat)
        error = self.kernel_hat - self.kernel
        degrees = self.kernel.sum(axis=1)
        delta = error.sum(axis=1)
        eta = np.abs(delta / degrees).max()
        m_exact = self.kernel / np.sqrt(np.outer(degrees, degrees))
        base_norm = np.linalg.norm(m_exact, 2)
        scaled = error / np.sqrt(np.outer(degrees, degrees))
        term_scaled = (1 + eta) * np.linalg.norm(scaled, 2) / base_norm
        degrees_hat = self.kernel_hat.sum(axis=1)
        m_hat = self.kernel_hat / np.sqrt(np.outer(degrees_hat, degrees_hat))

        assert report.eta == pytest.approx(eta, rel=1e-10)
        assert report.term_scaled == pytest.approx(term_scaled, rel=1e-10)
        assert report.term_degree == report.eta
        assert report.bound == pytest.approx(term_scaled + eta, rel=1e-10)
        assert report.kernel_err == pytest.approx(np.linalg.norm(error, 2), rel=1e-10)
        assert report.delta_norm == pytest.approx(np.abs(delta).max(), rel=1e-10)
        assert report.base_norm == pytest.approx(base_norm, rel=1e-10)
        assert report.hat_valid
        assert report.normalized_err == pytest.approx(
            np.linalg.norm(m_hat - m_exact, 2) / base_norm, rel=1e-10
        )

    def test_bound_holds_for_small_perturbations(self):
        report = perturbation_report(self.kernel, self.kernel_hat)
        assert report.normalized_err <= report.bound * (1 + 1e-6)

    def test_baseline_reuse_is_equivalent(self):
        baseline = perturbation_baseline(self.kernel)
        assert isinstance(baseline, PerturbationBaseline)
        direct = perturbation_report(self.kernel, self.kernel_hat)
        reused = perturbation_report(self.kernel, self.kernel_hat, baseline=baseline)
        assert direct == reused

    def test_invalid_hat_degrees_flagged_not_raised(self):
        spoiled = self.kernel.copy()
        shift = 2.0 * spoiled[0].sum()
        spoiled[0, :] -= shift / spoiled.shape[0]
        spoiled[:, 0] = spoiled[0, :]
        report = perturbation_report(self.kernel, spoiled)
        assert not report.hat_valid
        assert report.normalized_err is None
        assert report.eta > 0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidArgumentError):
            perturbation_report(self.kernel, self.kernel_hat[:10, :10])

    @settings(max_examples=30, deadline=None)
    @given(
        entries=hnp.arrays(
            np.float64, (12, 12),
            elements=st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
        )
    )
    def test_degree_shift_bounded_by_kernel_error(self, entries):
        # |row sum of E| <= sqrt(n) ||E||_2 for any symmetric E
        kernel = small_kernel(n=12, seed=8, sigma=2.0)
        report = perturbation_report(kernel, kernel + 0.5 * (entries + entries.T))
        n = kernel.shape[0]
        assert report.delta_norm <= np.sqrt(n) * report.kernel_err + 1e-9


class TestNystromPerturbations:
    """The machinery applied to real landmark reconstructions."""

    def setup_method(self):
        self.data = make_blobs(400, k=3, seed=2)
        self.config = KernelConfig(0.2)
        self.dense = build_dense_kernel(self.data.samples, self.config)
        self.baseline = perturbation_baseline(self.dense.matrix)

    def report_at(self, m, seed):
        idx = sample_landmarks_uniform(400, m, seed)
        factors = build_nystrom_factors(self.data.samples, idx, self.config)
        khat = nystrom_reconstruct(factors)
        return perturbation_report(self.dense.matrix, khat, baseline=self.baseline)

    def test_bound_holds_for_landmark_reconstructions(self):
        for m in (20, 80, 160):
            report = self.report_at(m, seed=100)
            assert report.hat_valid
            assert report.normalized_err <= report.bound * (1 + 1e-6)

    def test_degree_error_shrinks_with_more_landmarks(self):
        means = []
        for m in (20, 80, 160):
            etas = [self.report_at(m, seed=100 + s).eta for s in range(5)]
            means.append(np.mean(etas))
        assert means[0] > means[1] > means[2]
        assert means[2] < 1.0


class TestGammaSweep:
    def setup_method(self):
        self.kernel = build_dense_kernel(
            make_blobs(120, k=3, seed=9).samples, KernelConfig(0.2)
        ).matrix

    def test_rows_sorted_and_rank_monotone(self):
        rows = sweep_gamma(self.kernel, m=15, gammas=[1e-1, 1e-3, 1e-2], trials=3, seed=0)
        assert [r.gamma for r in rows] == [1e-3, 1e-2, 1e-1]
        ranks = [r.mean_rank for r in rows]
        assert ranks[0] >= ranks[1] >= ranks[2]
        for row in rows:
            assert row.trials == 3
            assert row.max_error <= 1.0 + 1e-8
            assert row.max_gap <= 1e-8

    def test_gamma_one_keeps_a_single_direction(self):
        (row,) = sweep_gamma(self.kernel, m=10, gammas=[1.0], trials=4, seed=1)
        assert row.mean_rank == 1.0
        assert row.std_rank == 0.0
        assert row.max_error <= 1.0 + 1e-8

    def test_deterministic_per_seed(self):
        a = sweep_gamma(self.kernel, m=12, gammas=[1e-2, 1e-1], trials=2, seed=5)
        b = sweep_gamma(self.kernel, m=12, gammas=[1e-2, 1e-1], trials=2, seed=5)
        assert a == b

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            sweep_gamma(self.kernel, m=10, gammas=[], trials=1)
        with pytest.raises(InvalidArgumentError):
            sweep_gamma(self.kernel, m=10, gammas=[1e-2], trials=0)
