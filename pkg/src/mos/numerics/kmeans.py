"""Lloyd's k-means with k-means++ seeding.

Deterministic given an RngStream: identical streams reproduce identical
centroids bitwise. Empty clusters are re-seeded to the point currently
farthest from its assigned centroid, which cannot increase the objective
once assignments are recomputed.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import ArgumentError
from .rng import RngStream


def _cost(points: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    diff = points - centroids[assignments]
    return float(np.sum(diff * diff))


def _plusplus_seed(points: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(gen.integers(0, n))
    centroids[0] = points[first]
    dist_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = dist_sq.sum()
        if total <= 0.0:
            # all remaining mass on already-chosen points: fall back to uniform
            idx = int(gen.integers(0, n))
        else:
            idx = int(gen.choice(n, p=dist_sq / total))
        centroids[i] = points[idx]
        dist_sq = np.minimum(dist_sq, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def kmeans(
    points: np.ndarray,
    k: int,
    max_iters: int = 50,
    rng: RngStream = RngStream(0),
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster ``points`` (m x d) into ``k`` centroids.

    Returns (centroids (k x d), assignments (m,)). Requires k distinct
    points; stops at an assignment fixpoint or after ``max_iters`` rounds.
    The within-cluster squared distance is asserted non-increasing at every
    iteration.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ArgumentError(f"points must be a 2-d array, got shape {pts.shape}")
    if max_iters < 1:
        raise ArgumentError("max_iters must be >= 1")
    n_distinct = np.unique(pts, axis=0).shape[0]
    if not (1 <= k <= n_distinct):
        raise ArgumentError(f"k={k} exceeds the {n_distinct} distinct points")

    gen = rng.generator()
    centroids = _plusplus_seed(pts, k, gen)

    def assign(cents: np.ndarray) -> np.ndarray:
        d2 = np.sum((pts[:, None, :] - cents[None, :, :]) ** 2, axis=2)
        return np.argmin(d2, axis=1)  # argmin ties -> lower index

    assignments = assign(centroids)
    prev_cost = _cost(pts, centroids, assignments)
    for _ in range(max_iters):
        new_centroids = centroids.copy()
        for j in range(k):
            members = assignments == j
            if members.any():
                new_centroids[j] = pts[members].mean(axis=0)
        # re-seed empty clusters to the globally worst-fit point
        for j in range(k):
            if not (assignments == j).any():
                dist = np.sum((pts - new_centroids[assignments]) ** 2, axis=1)
                new_centroids[j] = pts[int(np.argmax(dist))]
        new_assignments = assign(new_centroids)
        new_cost = _cost(pts, new_centroids, new_assignments)
        assert new_cost <= prev_cost * (1.0 + 1e-9) + 1e-12, (
            f"k-means objective increased: {prev_cost} -> {new_cost}"
        )
        converged = bool(np.array_equal(new_assignments, assignments))
        centroids, assignments, prev_cost = new_centroids, new_assignments, new_cost
        if converged:
            break
    return centroids, assignments
