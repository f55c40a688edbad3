"""Clustering quality scores and eigenspace comparison measures.

Label-based scores resolve the arbitrary cluster numbering by maximizing
over matchings: exhaustively for small k, via optimal linear assignment
beyond that. Subspace measures work directly on orthonormal embeddings.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidArgumentError, UndefinedMetricError
from .linalg import spectral_norm

# largest k for which the matching is brute-forced over all permutations
_EXHAUSTIVE_K = 8

_ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class ContingencyTable:
    """Joint label counts: counts[i, j] = |true cluster i and predicted j|."""

    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _check_labels(truth, pred):
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.ndim != 1 or pred.ndim != 1 or truth.shape != pred.shape:
        raise InvalidArgumentError(
            f"label vectors must be 1-d and equal length, got {truth.shape} and {pred.shape}"
        )
    if truth.size == 0:
        raise UndefinedMetricError("scores are undefined for empty label vectors")
    if truth.min() < 0 or pred.min() < 0:
        raise InvalidArgumentError("labels must be nonnegative integers")
    return truth.astype(np.intp), pred.astype(np.intp)


def build_contingency(truth, pred, k: int | None = None) -> ContingencyTable:
    """Count joint label occurrences on a k-by-k grid."""
    truth, pred = _check_labels(truth, pred)
    if k is None:
        k = int(max(truth.max(), pred.max())) + 1
    if truth.max() >= k or pred.max() >= k:
        raise InvalidArgumentError(f"labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (truth, pred), 1)
    return ContingencyTable(counts=counts)


def pairwise_f_matrix(table: ContingencyTable) -> np.ndarray:
    """Per-pair F measures: harmonic mean of precision n_ij / |pred j| and
    recall n_ij / |true i|, zero wherever the joint count is zero."""
    counts = table.counts.astype(np.float64)
    rows = table.row_sums.astype(np.float64)
    cols = table.col_sums.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(cols > 0, counts / np.where(cols > 0, cols, 1.0), 0.0)
        recall = np.where(rows[:, None] > 0, counts / np.where(rows[:, None] > 0, rows[:, None], 1.0), 0.0)
        denom = precision + recall
        f = np.where(counts > 0, 2.0 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)
    return f


def _best_match_mean(f: np.ndarray) -> float:
    k = f.shape[0]
    if k <= _EXHAUSTIVE_K:
        best = 0.0
        idx = np.arange(k)
        for perm in itertools.permutations(range(k)):
            best = max(best, float(f[idx, perm].sum()))
        return best / k
    rows, cols = linear_sum_assignment(-f)
    return float(f[rows, cols].sum()) / k


def f_score(truth, pred, k: int) -> float:
    """Permutation-matched mean F measure over the k clusters, in [0, 1]."""
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    table = build_contingency(truth, pred, k)
    return _best_match_mean(pairwise_f_matrix(table))


def _entropy(sizes: np.ndarray, n: int) -> float:
    probs = sizes[sizes > 0] / n
    return float(-(probs * np.log(probs)).sum())


def nmi(truth, pred) -> float:
    """Normalized mutual information, 2 I(T;P) / (H(T) + H(P)), natural log.

    Both partitions trivial (a single cluster each) carry zero entropy and
    are by construction identical, so that case scores 1.
    """
    truth, pred = _check_labels(truth, pred)
    table = build_contingency(truth, pred)
    counts = table.counts
    n = table.total
    h_truth = _entropy(table.row_sums, n)
    h_pred = _entropy(table.col_sums, n)
    if h_truth + h_pred == 0.0:
        return 1.0
    info = 0.0
    rows = table.row_sums
    cols = table.col_sums
    for i, j in zip(*np.nonzero(counts)):
        nij = counts[i, j]
        info += (nij / n) * math.log(n * nij / (rows[i] * cols[j]))
    value = 2.0 * info / (h_truth + h_pred)
    return float(min(max(value, 0.0), 1.0))


def _check_orthonormal(u: np.ndarray, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] < u.shape[1] or u.shape[1] == 0:
        raise InvalidArgumentError(f"{name} must be a tall (n, k) matrix, got {u.shape}")
    gram = u.T @ u
    err = np.abs(gram - np.eye(u.shape[1])).max()
    if err > _ORTHO_TOL:
        raise InvalidArgumentError(
            f"{name} does not have orthonormal columns (deviation {err:.3e} > {_ORTHO_TOL:g})"
        )
    return u


def eigenvector_alignment(u_hat: np.ndarray, u: np.ndarray) -> float:
    """Mean squared cosine between subspaces: ||U_hat^T U||_F^2 / k.

    Equals 1 exactly when the two orthonormal bases span the same space
    and decays toward 0 as the spans separate.
    """
    u_hat = _check_orthonormal(u_hat, "u_hat")
    u = _check_orthonormal(u, "u")
    if u_hat.shape != u.shape:
        raise InvalidArgumentError(f"shape mismatch: {u_hat.shape} vs {u.shape}")
    overlap = u_hat.T @ u
    return float(np.einsum("ij,ij->", overlap, overlap) / u.shape[1])


def largest_principal_angle(u1: np.ndarray, u2: np.ndarray) -> float:
    """Largest principal angle between two orthonormal column spans, radians.

    Computed as arcsin of the spectral norm of the residual of u1 after
    projection onto span(u2); never forms an n-by-n projector.
    """
    u1 = _check_orthonormal(u1, "u1")
    u2 = _check_orthonormal(u2, "u2")
    if u1.shape != u2.shape:
        raise InvalidArgumentError(f"shape mismatch: {u1.shape} vs {u2.shape}")
    residual = u1 - u2 @ (u2.T @ u1)
    s = min(1.0, spectral_norm(residual))
    return float(np.arcsin(s))
