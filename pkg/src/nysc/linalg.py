"""Dense symmetric eigendecomposition and SVD helpers.

Thin wrappers over LAPACK (through scipy) that pin down the conventions the
rest of the library depends on: descending order, a deterministic sign for
every vector, and a relative tolerance that decides which part of the
spectrum counts as numerically nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, NotPsdError, NumericalError

# relative eigenvalue cutoff used everywhere a pseudo-inverse shows up
DEFAULT_RANK_TOL = 1e-12

# symmetry is checked entrywise against this absolute tolerance
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SymmetricEvd:
    """Reduced eigendecomposition of a symmetric matrix.

    vectors: (p, r) orthonormal columns, one per retained eigenvalue.
    values:  (r,) eigenvalues, descending, each above the drop threshold.
    dropped: number of eigenvalues discarded as numerically negligible.
    """

    vectors: np.ndarray
    values: np.ndarray
    dropped: int

    @property
    def rank(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class TruncatedSvd:
    """Top-k singular triplets of a rectangular matrix.

    left: (p, k), svals: (k,) descending, right: (q, k).
    """

    left: np.ndarray
    svals: np.ndarray
    right: np.ndarray


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry of each is positive.

    Eigenvectors are only defined up to sign; pinning one makes repeated
    runs bit-comparable. Operates in place and returns the sign vector.
    """
    if vectors.size == 0:
        return np.ones(vectors.shape[1])
    lead = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs
    return signs


def _check_square_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix, got shape {a.shape}")
    if a.size and not np.isfinite(a).all():
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    if a.size and np.abs(a - a.T).max() > SYMMETRY_TOL:
        raise InvalidArgumentError(
            f"{name} is not symmetric within {SYMMETRY_TOL:g} "
            f"(max asymmetry {np.abs(a - a.T).max():.3e})"
        )
    return a


def sym_evd(a: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> SymmetricEvd:
    """Eigendecomposition of a symmetric matrix, descending, noise trimmed.

    Eigenvalues at or below rank_tol times the largest magnitude are
    dropped (their count is reported in the result), so the retained
    spectrum is strictly positive whenever the matrix has a positive
    leading eigenvalue. Raises InvalidArgumentError for asymmetric input
    and NumericalError if the eigensolver fails.
    """
    a = _check_square_symmetric(a, "matrix")
    if rank_tol < 0:
        raise InvalidArgumentError("rank_tol must be nonnegative")
    try:
        values, vectors = scipy.linalg.eigh(a)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc
    values = values[::-1]
    vectors = vectors[:, ::-1]
    threshold = rank_tol * (np.abs(values).max() if values.size else 0.0)
    keep = values > threshold
    dropped = int(values.size - keep.sum())
    vectors = np.ascontiguousarray(vectors[:, keep])
    _fix_signs(vectors)
    return SymmetricEvd(vectors=vectors, values=values[keep], dropped=dropped)


def truncated_svd(a: np.ndarray, k: int) -> TruncatedSvd:
    """Top-k singular triplets of a dense matrix, descending svals."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {a.shape}")
    if not 1 <= k <= min(a.shape):
        raise InvalidArgumentError(f"k={k} out of range for shape {a.shape}")
    try:
        u, s, vt = scipy.linalg.svd(a, full_matrices=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed to converge: {exc}") from exc
    u = np.ascontiguousarray(u[:, :k])
    v = np.ascontiguousarray(vt[:k].T)
    signs = _fix_signs(u)
    v *= signs
    return TruncatedSvd(left=u, svals=s[:k], right=v)


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value, computed by a full dense factorization."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return 0.0
    try:
        s = scipy.linalg.svdvals(a)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"singular value computation failed: {exc}") from exc
    return float(s[0]) if s.size else 0.0


def pseudo_inverse_from_evd(evd: SymmetricEvd) -> np.ndarray:
    """Moore-Penrose inverse assembled from a trimmed eigendecomposition."""
    if evd.rank == 0:
        p = evd.vectors.shape[0]
        return np.zeros((p, p))
    return (evd.vectors / evd.values) @ evd.vectors.T


def best_rank_l(evd: SymmetricEvd, l: int) -> SymmetricEvd:
    """First l eigenpairs; the optimal rank-l approximation in spectral norm."""
    if not 1 <= l <= evd.rank:
        raise InvalidArgumentError(f"l={l} out of range for retained rank {evd.rank}")
    return SymmetricEvd(
        vectors=evd.vectors[:, :l], values=evd.values[:l], dropped=evd.dropped
    )


def psd_sqrt(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix.

    Eigenvalues slightly negative from roundoff (within -tol times the
    spectral norm) are clamped to zero; anything more negative raises
    NotPsdError.
    """
    a = _check_square_symmetric(a, "matrix")
    try:
        values, vectors = scipy.linalg.eigh(a)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc
    scale = np.abs(values).max() if values.size else 0.0
    if values.size and values[0] < -tol * scale:
        raise NotPsdError(
            f"matrix has eigenvalue {values[0]:.3e}, below -{tol:g} * {scale:.3e}"
        )
    root = np.sqrt(np.clip(values, 0.0, None))
    out = (vectors * root) @ vectors.T
    return 0.5 * (out + out.T)
