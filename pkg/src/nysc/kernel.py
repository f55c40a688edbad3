"""Gaussian kernel evaluation and Nystrom landmark factors.

The similarity between samples x and y is exp(-||x - y||^2 / sigma^2).
Note the convention: sigma^2 in the denominator, no factor of two.

Dense n-by-n kernels are only formed below a configurable size cap; the
landmark path builds the n-by-m block C and the m-by-m block W without
ever touching n-by-n storage.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SizeLimitError
from .linalg import best_rank_l, pseudo_inverse_from_evd, sym_evd

DEFAULT_DENSE_CAP = 20_000

# environment override for the dense cap, e.g. NYSC_DENSE_CAP=50000
DENSE_CAP_ENV_VAR = "NYSC_DENSE_CAP"

# row block size for kernel assembly, keeps temporaries around 256 MB
_BLOCK_ENTRIES = 1 << 25


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel bandwidth. sigma must be a positive finite float."""

    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise InvalidArgumentError(f"sigma must be positive and finite, got {self.sigma}")


@dataclass(frozen=True)
class DenseKernel:
    """Full kernel matrix together with its row sums (graph degrees)."""

    matrix: np.ndarray
    degrees: np.ndarray


@dataclass(frozen=True)
class NystromFactors:
    """Landmark similarity blocks.

    indices: sorted distinct landmark positions, length m.
    cross:   (n, m) similarities between every sample and each landmark.
    inner:   (m, m) similarities among the landmarks; equals cross[indices].
    """

    indices: np.ndarray
    cross: np.ndarray
    inner: np.ndarray

    @property
    def n(self) -> int:
        return self.cross.shape[0]

    @property
    def m(self) -> int:
        return self.cross.shape[1]


def resolved_dense_cap(dense_cap: int | None = None) -> int:
    """Dense size cap: explicit argument, else environment, else default."""
    if dense_cap is not None:
        return int(dense_cap)
    env = os.environ.get(DENSE_CAP_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidArgumentError(
                f"{DENSE_CAP_ENV_VAR} must be an integer, got {env!r}"
            ) from exc
    return DEFAULT_DENSE_CAP


def _as_data(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise InvalidArgumentError(f"data must be a nonempty (n, d) array, got shape {data.shape}")
    if not np.isfinite(data).all():
        raise InvalidArgumentError("data contains non-finite entries")
    return data


def gaussian_similarity(x: np.ndarray, y: np.ndarray, sigma: float) -> float:
    """Similarity between two samples: exp(-||x - y||^2 / sigma^2)."""
    KernelConfig(sigma)
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidArgumentError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InvalidArgumentError("inputs contain non-finite entries")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / (sigma * sigma)))


def _kernel_block(block: np.ndarray, points: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian similarities between two point sets, one row block at a time."""
    sq_block = np.einsum("ij,ij->i", block, block)
    sq_points = np.einsum("ij,ij->i", points, points)
    d2 = sq_block[:, None] + sq_points[None, :] - 2.0 * (block @ points.T)
    np.clip(d2, 0.0, None, out=d2)
    d2 /= -(sigma * sigma)
    return np.exp(d2, out=d2)


def build_dense_kernel(
    data: np.ndarray, config: KernelConfig, dense_cap: int | None = None
) -> DenseKernel:
    """Full n-by-n Gaussian kernel with row-sum degrees.

    Raises SizeLimitError when n exceeds the dense cap (default 20000,
    overridable per call or through the NYSC_DENSE_CAP environment
    variable). The result is exactly symmetric with unit diagonal; the
    degrees use numpy's pairwise row summation.
    """
    data = _as_data(data)
    n = data.shape[0]
    cap = resolved_dense_cap(dense_cap)
    if n > cap:
        raise SizeLimitError(
            f"dense kernel of size {n} exceeds the cap of {cap}; "
            f"use the landmark path or raise {DENSE_CAP_ENV_VAR}"
        )
    matrix = np.empty((n, n))
    step = max(1, _BLOCK_ENTRIES // n)
    for start in range(0, n, step):
        stop = min(n, start + step)
        matrix[start:stop] = _kernel_block(data[start:stop], data, config.sigma)
    matrix = 0.5 * (matrix + matrix.T)
    np.fill_diagonal(matrix, 1.0)
    degrees = matrix.sum(axis=1)
    return DenseKernel(matrix=matrix, degrees=degrees)


def sample_landmarks_uniform(n: int, m: int, seed: int) -> np.ndarray:
    """Draw m distinct sample positions uniformly without replacement."""
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    return rng.choice(n, size=m, replace=False)


def build_nystrom_factors(
    data: np.ndarray, indices: np.ndarray, config: KernelConfig
) -> NystromFactors:
    """Form the landmark blocks C (n-by-m) and W (m-by-m).

    Indices are deduplicated-checked and stored sorted; W is literally the
    landmark rows of C, so the two blocks can never disagree. A warning is
    emitted when two landmarks coincide numerically, since W is then
    singular and downstream pseudo-inverses will trim its spectrum.
    """
    data = _as_data(data)
    n = data.shape[0]
    indices = np.asarray(indices)
    if indices.ndim != 1 or indices.size == 0:
        raise InvalidArgumentError("indices must be a nonempty 1-d integer array")
    if not np.issubdtype(indices.dtype, np.integer):
        raise InvalidArgumentError(f"indices must be integers, got dtype {indices.dtype}")
    if indices.min() < 0 or indices.max() >= n:
        raise InvalidArgumentError(f"indices must lie in [0, {n}), got range "
                                   f"[{indices.min()}, {indices.max()}]")
    indices = np.sort(indices.astype(np.intp))
    if np.any(np.diff(indices) == 0):
        raise InvalidArgumentError("duplicate landmark indices are not allowed")

    landmarks = data[indices]
    m = landmarks.shape[0]
    sq = np.einsum("ij,ij->i", landmarks, landmarks)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (landmarks @ landmarks.T)
    np.fill_diagonal(d2, np.inf)
    if d2.min() < (1e-12) ** 2:
        warnings.warn(
            "two landmarks are numerically identical; the landmark kernel is singular",
            RuntimeWarning,
            stacklevel=2,
        )

    cross = np.empty((n, m))
    step = max(1, _BLOCK_ENTRIES // max(m, 1))
    for start in range(0, n, step):
        stop = min(n, start + step)
        cross[start:stop] = _kernel_block(data[start:stop], landmarks, config.sigma)
    inner = cross[indices].copy()
    return NystromFactors(indices=indices, cross=cross, inner=inner)


def nystrom_reconstruct(
    factors: NystromFactors, l: int | None = None, dense_cap: int | None = None
) -> np.ndarray:
    """Assemble the n-by-n approximation C W^+ C^T, optionally rank limited.

    With l given, W is replaced by its best rank-l approximation first.
    This forms dense n-by-n output and is therefore subject to the same
    size cap as the exact kernel path.
    """
    n = factors.n
    cap = resolved_dense_cap(dense_cap)
    if n > cap:
        raise SizeLimitError(f"reconstruction of size {n} exceeds the cap of {cap}")
    evd = sym_evd(factors.inner)
    if l is not None:
        evd = best_rank_l(evd, l)
        half = factors.cross @ (evd.vectors / np.sqrt(evd.values))
        return half @ half.T
    approx = factors.cross @ pseudo_inverse_from_evd(evd) @ factors.cross.T
    return 0.5 * (approx + approx.T)
