"""Seeded k-means (plus-plus initialization, Lloyd refinement).

Behavior is fully deterministic given the seed: distance ties go to the
lowest centroid index, and a cluster that empties out is reseeded at the
point farthest from its current centroid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class KMeansConfig:
    max_iter: int = 10
    restarts: int = 1

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.restarts < 1:
            raise InvalidArgumentError(f"restarts must be >= 1, got {self.restarts}")


@dataclass
class ClusteringResult:
    labels: np.ndarray
    centroids: np.ndarray
    sse: float
    iterations: int
    converged: bool
    sse_history: list = field(default_factory=list)


def normalize_rows(x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Scale each row to unit Euclidean norm; rows with norm <= tol pass through."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {x.shape}")
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    safe = np.where(norms > tol, norms, 1.0)
    return x / safe[:, None]


def _sq_dist_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = points - center
    return np.einsum("ij,ij->i", diff, diff)


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first center uniform, later ones proportional to
    squared distance from the nearest chosen center."""
    n = points.shape[0]
    chosen = np.empty(k, dtype=np.intp)
    chosen[0] = rng.integers(n)
    d2 = _sq_dist_to(points, points[chosen[0]])
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining mass sits on already-chosen points; fall back
            # to a uniform draw over the unchosen ones
            mask = np.ones(n, dtype=bool)
            mask[chosen[:j]] = False
            pool = np.flatnonzero(mask)
            pick = pool[rng.integers(pool.size)] if pool.size else int(chosen[0])
        else:
            pick = int(rng.choice(n, p=d2 / total))
        chosen[j] = pick
        d2 = np.minimum(d2, _sq_dist_to(points, points[pick]))
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 up to the common ||x||^2 term; argmin takes the lowest
    # index on ties
    cross = points @ centroids.T
    c2 = np.einsum("ij,ij->i", centroids, centroids)
    return np.argmin(c2[None, :] - 2.0 * cross, axis=1)


def _repair_empty(points, centroids, labels, k):
    counts = np.bincount(labels, minlength=k)
    if counts.min() > 0:
        return labels, False
    taken = set()
    for c in np.flatnonzero(counts == 0):
        d2 = _sq_dist_to(points, centroids[c])
        for idx in taken:
            d2[idx] = -np.inf
        far = int(np.argmax(d2))
        centroids[c] = points[far]
        taken.add(far)
    return _assign(points, centroids), True


def _lloyd(points: np.ndarray, k: int, config: KMeansConfig,
           rng: np.random.Generator) -> ClusteringResult:
    n, d = points.shape
    centroids = _plusplus_init(points, k, rng)
    labels = _assign(points, centroids)
    prev = None
    history = []
    iterations = 0
    converged = False
    for _ in range(config.max_iter):
        labels, _ = _repair_empty(points, centroids, labels, k)
        sums = np.zeros((k, d))
        np.add.at(sums, labels, points)
        counts = np.bincount(labels, minlength=k)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        iterations += 1
        diff = points - centroids[labels]
        history.append(float(np.einsum("ij,ij->", diff, diff)))
        if prev is not None and np.array_equal(labels, prev):
            converged = True
            break
        prev = labels
        labels = _assign(points, centroids)
    # final assignment against the final centroids
    labels, _ = _repair_empty(points, centroids, _assign(points, centroids), k)
    diff = points - centroids[labels]
    sse = float(np.einsum("ij,ij->", diff, diff))
    return ClusteringResult(labels=labels.astype(np.int64), centroids=centroids,
                            sse=sse, iterations=iterations, converged=converged,
                            sse_history=history)


def kmeans(points: np.ndarray, k: int, seed: int,
           config: KMeansConfig = KMeansConfig()) -> ClusteringResult:
    """Cluster rows of points into k groups.

    Runs config.restarts independent seeded attempts and keeps the one
    with the lowest sum of squared errors (first on ties).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InvalidArgumentError(f"points must be a nonempty (n, d) array, got {points.shape}")
    if not np.isfinite(points).all():
        raise InvalidArgumentError("points contain non-finite entries")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"need 1 <= k <= n, got k={k}, n={n}")
    seeds = np.random.SeedSequence(seed).spawn(config.restarts)
    best = None
    for child in seeds:
        result = _lloyd(points, k, config, np.random.default_rng(child))
        if best is None or result.sse < best.sse:
            best = result
    return best
