"""Spectral embeddings: exact and landmark-accelerated.

All pipelines share the same outline: estimate the top-k eigenvectors of
the degree-normalized kernel D^{-1/2} K D^{-1/2}, normalize the rows of
the eigenvector block, then run k-means. They differ in how the
eigenvectors are obtained:

- exact:   dense eigendecomposition of the full normalized kernel.
- adaptive: rank-adaptive landmark method. The landmark kernel W is
  truncated where its spectrum falls below a relative threshold gamma,
  the n-by-l factor G = C U_l S_l^{-1/2} is formed, approximate degrees
  come from two matrix-vector products with G, and the embedding is read
  off a thin SVD of the rescaled factor. No n-by-n matrix is ever formed.
- fowlkes: classic one-shot extension with exact degrees computed from
  the landmark blocks, orthogonalized through an m-by-m auxiliary
  eigenproblem. Cost grows with m^2.
- li:     rank-k landmark method that normalizes W first and keeps only
  k terms throughout; cheapest, but its eigenvector estimates are not
  orthogonal in general.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateDegreeError,
    DegenerateGraphError,
    InvalidArgumentError,
    NumericalError,
)
from .kernel import DenseKernel, KernelConfig, NystromFactors, build_dense_kernel
from .kmeans import ClusteringResult, KMeansConfig, kmeans, normalize_rows
from .linalg import SymmetricEvd, _fix_signs, pseudo_inverse_from_evd, sym_evd

logger = logging.getLogger(__name__)

METHODS = ("exact", "proposed", "fowlkes", "li")

# estimated degrees this slightly negative (relative to the largest) are
# treated as roundoff and clamped; anything worse is an error
_DEGREE_NOISE_REL = 1e-10
_DEGREE_CLAMP_REL = 1e-12


@dataclass(frozen=True)
class RankPolicy:
    """Spectrum truncation rule: keep eigenvalues within gamma of the top.

    min_rank is a floor on the retained rank; pipelines raise it to their
    cluster count so the embedding always has enough directions.
    """

    gamma: float = 1e-2
    min_rank: int = 1

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise InvalidArgumentError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.min_rank < 1:
            raise InvalidArgumentError(f"min_rank must be >= 1, got {self.min_rank}")


@dataclass
class SpectralEmbedding:
    """Estimated top-k eigenvectors of the normalized kernel.

    vectors: (n, k) embedding columns.
    values:  (k,) matching eigenvalue estimates, descending.
    method:  which pipeline produced it.
    rank:    landmark truncation rank l, when the method uses one.
    orthonormal: whether the columns are orthonormal by construction.
    """

    vectors: np.ndarray
    values: np.ndarray
    method: str
    rank: int | None = None
    orthonormal: bool = True


def modified_kernel(dense: DenseKernel) -> np.ndarray:
    """Degree-normalized kernel D^{-1/2} K D^{-1/2} (dense path)."""
    if np.any(dense.degrees <= 0):
        bad = np.flatnonzero(dense.degrees <= 0)[:10]
        raise DegenerateGraphError(
            f"samples {bad.tolist()} have nonpositive degree; the similarity graph is disconnected "
            "at machine precision (sigma too small?)"
        )
    inv_root = 1.0 / np.sqrt(dense.degrees)
    out = dense.matrix * inv_root[:, None]
    out *= inv_root[None, :]
    return 0.5 * (out + out.T)


def determine_rank(evd: SymmetricEvd, policy: RankPolicy) -> int:
    """Largest l with evals[l-1] >= gamma * evals[0], clamped to the policy floor."""
    if evd.rank == 0:
        raise NumericalError("cannot choose a rank from an empty spectrum")
    l = int(np.count_nonzero(evd.values >= policy.gamma * evd.values[0]))
    l = max(l, 1)
    if l < policy.min_rank:
        clamped = min(policy.min_rank, evd.rank)
        logger.info("rank rule chose l=%d below the floor %d; clamping to %d",
                    l, policy.min_rank, clamped)
        l = clamped
    return min(l, evd.rank)


def _finish(vectors: np.ndarray, values: np.ndarray, method: str, k: int,
            kmeans_config: KMeansConfig, seed: int, rank: int | None = None,
            orthonormal: bool = True) -> tuple[ClusteringResult, SpectralEmbedding]:
    embedding = SpectralEmbedding(vectors=vectors, values=values, method=method,
                                  rank=rank, orthonormal=orthonormal)
    rows = normalize_rows(vectors)
    clusters = kmeans(rows, k, seed=seed, config=kmeans_config)
    return clusters, embedding


def exact_sc(data: np.ndarray, config: KernelConfig, k: int, seed: int = 0,
             kmeans_config: KMeansConfig = KMeansConfig(),
             dense_cap: int | None = None) -> tuple[ClusteringResult, SpectralEmbedding]:
    """Spectral clustering from the dense normalized kernel.

    Subject to the dense size cap. The eigenvalues of the normalized
    kernel must lie in [0, 1] up to roundoff; a violation indicates a
    broken kernel and raises NumericalError.
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    dense = build_dense_kernel(data, config, dense_cap=dense_cap)
    normalized = modified_kernel(dense)
    evd = sym_evd(normalized)
    if evd.rank < k:
        raise NumericalError(f"normalized kernel has numerical rank {evd.rank} < k={k}")
    if evd.values[0] > 1.0 + 1e-10:
        raise NumericalError(
            f"leading eigenvalue {evd.values[0]:.12f} exceeds 1; normalized kernel is invalid"
        )
    vectors = evd.vectors[:, :k].copy()
    values = np.clip(evd.values[:k], 0.0, 1.0)
    return _finish(vectors, values, "exact", k, kmeans_config, seed)


def _clamped_degrees(degrees: np.ndarray, method: str) -> np.ndarray:
    """Validate approximate degrees, absorbing tiny negative roundoff."""
    top = float(degrees.max(initial=0.0))
    if top <= 0:
        raise DegenerateDegreeError(
            f"{method}: all estimated degrees are nonpositive", np.arange(degrees.size)
        )
    floor = -_DEGREE_NOISE_REL * top
    bad = np.flatnonzero(degrees < floor)
    if bad.size:
        raise DegenerateDegreeError(
            f"{method}: estimated degrees for samples {bad[:10].tolist()} are negative "
            f"beyond roundoff (min {degrees.min():.3e}); the kernel approximation is unusable here",
            bad,
        )
    tiny = degrees <= 0
    if np.any(tiny):
        degrees = degrees.copy()
        degrees[tiny] = _DEGREE_CLAMP_REL * top
    return degrees


def adaptive_nystrom_sc(
    factors: NystromFactors, k: int, policy: RankPolicy = RankPolicy(), seed: int = 0,
    kmeans_config: KMeansConfig = KMeansConfig(),
) -> tuple[ClusteringResult, SpectralEmbedding]:
    """Rank-adaptive landmark spectral clustering.

    Works entirely through the n-by-l factor G with l chosen from the
    spectrum of the landmark kernel, so time scales as O(n m l) and
    memory as O(n max(m, k)).
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    evd = sym_evd(factors.inner)
    if evd.rank < k:
        raise NumericalError(
            f"landmark kernel has numerical rank {evd.rank} < k={k}; add or spread landmarks"
        )
    effective = RankPolicy(gamma=policy.gamma, min_rank=max(policy.min_rank, k))
    l = determine_rank(evd, effective)
    factor = factors.cross @ (evd.vectors[:, :l] / np.sqrt(evd.values[:l]))
    # degrees of the implicit rank-l kernel G G^T via two matrix-vector
    # products; never materializes anything n-by-n
    degrees = factor @ factor.sum(axis=0)
    degrees = _clamped_degrees(degrees, "adaptive")
    factor /= np.sqrt(degrees)[:, None]
    try:
        left, svals, _ = scipy.linalg.svd(factor, full_matrices=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"thin SVD of the rescaled factor failed: {exc}") from exc
    vectors = np.ascontiguousarray(left[:, :k])
    _fix_signs(vectors)
    values = svals[:k] ** 2
    return _finish(vectors, values, "proposed", k, kmeans_config, seed, rank=l)


def _inv_sqrt_from_evd(evd: SymmetricEvd) -> np.ndarray:
    return (evd.vectors / np.sqrt(evd.values)) @ evd.vectors.T


def fowlkes_nystrom_sc(
    factors: NystromFactors, k: int, seed: int = 0,
    kmeans_config: KMeansConfig = KMeansConfig(),
) -> tuple[ClusteringResult, SpectralEmbedding]:
    """One-shot landmark extension with orthogonalized eigenvectors.

    Splits the similarities into the landmark block and the remainder,
    normalizes with degrees estimated from those blocks, then solves an
    m-by-m auxiliary eigenproblem to produce orthonormal eigenvector
    estimates for every sample. Cost grows as O(n m^2).
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    n, m = factors.cross.shape
    rest = np.setdiff1d(np.arange(n), factors.indices, assume_unique=False)
    landmark_block = factors.inner
    remainder = factors.cross[rest].T  # (m, n - m)

    ones_rest = remainder.sum(axis=1)
    d_landmark = landmark_block.sum(axis=1) + ones_rest
    w_evd = sym_evd(landmark_block)
    w_pinv = pseudo_inverse_from_evd(w_evd)
    d_rest = remainder.sum(axis=0) + remainder.T @ (w_pinv @ ones_rest)
    d_landmark = _clamped_degrees(d_landmark, "fowlkes")
    if d_rest.size:
        d_rest = _clamped_degrees(d_rest, "fowlkes")

    inv_root_lm = 1.0 / np.sqrt(d_landmark)
    w_tilde = landmark_block * inv_root_lm[:, None] * inv_root_lm[None, :]
    w_tilde = 0.5 * (w_tilde + w_tilde.T)
    b_tilde = remainder * inv_root_lm[:, None]
    if d_rest.size:
        b_tilde = b_tilde / np.sqrt(d_rest)[None, :]

    wt_evd = sym_evd(w_tilde)
    if wt_evd.rank < k:
        raise NumericalError(f"normalized landmark kernel has rank {wt_evd.rank} < k={k}")
    wt_inv_sqrt = _inv_sqrt_from_evd(wt_evd)
    aux = w_tilde + wt_inv_sqrt @ (b_tilde @ b_tilde.T) @ wt_inv_sqrt
    aux = 0.5 * (aux + aux.T)
    aux_evd = sym_evd(aux)
    if aux_evd.dropped:
        logger.debug("fowlkes: trimmed %d nonpositive eigenvalues of the auxiliary matrix",
                     aux_evd.dropped)
    if aux_evd.rank < k:
        raise NumericalError(f"auxiliary eigenproblem has rank {aux_evd.rank} < k={k}")
    lift = wt_inv_sqrt @ (aux_evd.vectors[:, :k] / np.sqrt(aux_evd.values[:k]))
    vectors = np.empty((n, k))
    vectors[factors.indices] = w_tilde @ lift
    if rest.size:
        vectors[rest] = b_tilde.T @ lift
    _fix_signs(vectors)
    values = aux_evd.values[:k].copy()
    return _finish(vectors, values, "fowlkes", k, kmeans_config, seed, rank=m)


def li_nystrom_sc(
    factors: NystromFactors, k: int, seed: int = 0,
    kmeans_config: KMeansConfig = KMeansConfig(), orthogonalize: bool = False,
) -> tuple[ClusteringResult, SpectralEmbedding]:
    """Rank-k landmark spectral clustering.

    Normalizes the landmark kernel by its own degrees, keeps its top k
    eigenpairs, extends to all samples, and rescales by degrees estimated
    from the rank-k model. Cost is O(n m k). The raw eigenvector
    estimates are not orthogonal; pass orthogonalize=True to replace them
    with an orthonormal basis of the same span (thin QR).
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    d_landmark = factors.inner.sum(axis=1)
    if np.any(d_landmark <= 0):
        bad = np.flatnonzero(d_landmark <= 0)
        raise DegenerateDegreeError(
            f"li: landmark degrees for positions {bad[:10].tolist()} are nonpositive", bad
        )
    inv_root = 1.0 / np.sqrt(d_landmark)
    w_bar = factors.inner * inv_root[:, None] * inv_root[None, :]
    w_bar = 0.5 * (w_bar + w_bar.T)
    evd = sym_evd(w_bar)
    if evd.rank < k:
        raise NumericalError(f"normalized landmark kernel has rank {evd.rank} < k={k}")
    top_vecs = evd.vectors[:, :k]
    top_vals = evd.values[:k]
    extended = (factors.cross * inv_root[None, :]) @ (top_vecs / top_vals[None, :])
    # degrees of the implicit rank-k model, again via matrix-vector products
    degrees = extended @ (top_vals * extended.sum(axis=0))
    bad = np.flatnonzero(degrees <= 0)
    if bad.size:
        raise DegenerateDegreeError(
            f"li: estimated degrees for samples {bad[:10].tolist()} are nonpositive "
            f"(min {degrees.min():.3e}); the rank-k model cannot normalize these rows",
            bad,
        )
    vectors = extended / np.sqrt(degrees)[:, None]
    orthonormal = False
    if orthogonalize:
        vectors, _ = np.linalg.qr(vectors)
        _fix_signs(vectors)
        orthonormal = True
    return _finish(vectors, top_vals.copy(), "li", k, kmeans_config, seed,
                   rank=k, orthonormal=orthonormal)
