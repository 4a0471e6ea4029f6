"""Theme-aware router: cosine scoring against the codebook plus sparse gating.

Scores are cosines between the projected input h(x) and each codebook row,
so they are invariant to positive rescaling of either side. The gate keeps
the top-k scores and softmaxes them; the codebook itself receives no
gradient (it is a buffer maintained by EMA).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError, InitializationError, RoutingError
from ..numerics.core import ZERO_NORM_EPS, keep_top_k, softmax, top_k_indices
from ..numerics.kmeans import kmeans
from ..numerics.rng import RngStream
from ..nn.mlp import MlpParams, init_mlp, mlp_forward_cached
from .codebook import Codebook

GATE_SUM_TOL = 1e-12
UNIT_NORM_TOL = 1e-9


@dataclass
class ThemeRouter:
    projection: MlpParams  # d -> D
    codebook: Codebook
    top_k: int

    def __post_init__(self):
        if not (1 <= self.top_k <= self.codebook.n_experts):
            raise ArgumentError(
                f"top_k must be in [1, {self.codebook.n_experts}], got {self.top_k}"
            )
        if self.projection.out_dim != self.codebook.dim:
            raise ArgumentError(
                f"projection output dim {self.projection.out_dim} != codebook dim {self.codebook.dim}"
            )

    @property
    def n_experts(self) -> int:
        return self.codebook.n_experts


def init_theme_router(
    in_dim: int, codebook_dim: int, n_experts: int, top_k: int, ema_decay: float, rng: RngStream
) -> ThemeRouter:
    """Router with a 2-layer projection MLP (hidden width = codebook dim)."""
    projection = init_mlp(
        [in_dim, codebook_dim, codebook_dim], ["relu", "identity"], rng
    )
    gen = rng.substream(7).generator()
    weights = gen.normal(size=(n_experts, codebook_dim))
    weights /= np.linalg.norm(weights, axis=1, keepdims=True)
    return ThemeRouter(projection, Codebook(weights, ema_decay), top_k)


def project_rows(router: ThemeRouter, X: np.ndarray):
    """h(x) for each row of X; returns (projections (t, D), mlp cache)."""
    return mlp_forward_cached(router.projection, np.atleast_2d(X))


def scores_from_projection(projection: np.ndarray, codebook: Codebook, context: str = "input"):
    p = np.asarray(projection, dtype=np.float64)
    pn = float(np.linalg.norm(p))
    if pn <= ZERO_NORM_EPS:
        raise RoutingError(f"zero-norm theme projection for {context}")
    row_norms = np.linalg.norm(codebook.weights, axis=1)
    return np.clip((codebook.weights @ p) / (row_norms * pn), -1.0, 1.0)


def theme_scores(router: ThemeRouter, x: np.ndarray) -> np.ndarray:
    """Relevance scores H(x): cosine of h(x) with each codebook row."""
    proj, _ = project_rows(router, np.asarray(x, dtype=np.float64))
    return scores_from_projection(proj[0], router.codebook)


def gate(scores: np.ndarray, k: int) -> np.ndarray:
    """Sparse gate: softmax over the k best scores, exact zeros elsewhere."""
    return softmax(keep_top_k(scores, k))


def gate_support(gate_vec: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.asarray(gate_vec) > 0.0)


def check_gate_invariants(gate_vec: np.ndarray, k: int) -> None:
    g = np.asarray(gate_vec, dtype=np.float64)
    n = g.shape[0]
    if (g < 0.0).any():
        raise ArgumentError("gate has negative entries")
    support = int((g > 0.0).sum())
    if support != min(k, n):
        raise ArgumentError(f"gate support {support} != min(k, n) = {min(k, n)}")
    if abs(float(g.sum()) - 1.0) > GATE_SUM_TOL:
        raise ArgumentError(f"gate sums to {g.sum()!r}, expected 1")


def dense_baseline_scores(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Plain linear router scores W @ x (comparison baseline only)."""
    W = np.asarray(weights, dtype=np.float64)
    v = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or v.ndim != 1 or W.shape[1] != v.shape[0]:
        raise ArgumentError(f"weights {W.shape} incompatible with input of dim {v.shape}")
    return W @ v


def init_codebook_kmeans(
    sample_vectors: np.ndarray, router: ThemeRouter, rng: RngStream
) -> Codebook:
    """Initialize codebook rows from k-means centroids of projected samples.

    Projects the sample through the router's current h(.), clusters with
    k = n_experts, and overwrites the codebook rows in place.
    """
    sample = np.atleast_2d(np.asarray(sample_vectors, dtype=np.float64))
    projections, _ = project_rows(router, sample)
    n = router.n_experts
    distinct = np.unique(projections, axis=0).shape[0]
    if distinct < n:
        raise InitializationError(
            f"only {distinct} distinct projections for {n} codebook rows"
        )
    centroids, _ = kmeans(projections, n, rng=rng)
    norms = np.linalg.norm(centroids, axis=1)
    if (norms <= ZERO_NORM_EPS).any():
        raise InitializationError("k-means produced a zero-norm centroid")
    router.codebook.weights[...] = centroids
    return router.codebook


def stability_margin(scores: np.ndarray, k: int) -> float:
    """Gap between the k-th and (k+1)-th largest scores (>= 0)."""
    s = np.asarray(scores, dtype=np.float64)
    if not (1 <= k < s.shape[0]):
        raise ArgumentError(f"k must satisfy 1 <= k < {s.shape[0]}, got {k}")
    ordered = np.sort(s)[::-1]
    return float(ordered[k - 1] - ordered[k])


def verify_stability(
    router: ThemeRouter, u1: np.ndarray, u2: np.ndarray, k: int
) -> tuple[bool, bool]:
    """Top-k stability of routing under cosine proximity of two directions.

    Both inputs must be unit vectors in theme space. With delta = 1 - u1.u2
    and margin m = (k-th minus (k+1)-th score of u1), the pair is
    "applicable" when m > 0 and delta < m**2 / 8; applicable pairs must
    select identical expert sets (same_support).
    """
    a = np.asarray(u1, dtype=np.float64)
    b = np.asarray(u2, dtype=np.float64)
    for name, v in (("u1", a), ("u2", b)):
        if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_NORM_TOL:
            raise ArgumentError(f"{name} must be unit norm (off by > {UNIT_NORM_TOL})")
    s1 = scores_from_projection(a, router.codebook)
    s2 = scores_from_projection(b, router.codebook)
    delta = 1.0 - float(a @ b)
    margin = stability_margin(s1, k)
    applicable = margin > 0.0 and delta < margin * margin / 8.0
    same_support = bool(np.array_equal(top_k_indices(s1, k), top_k_indices(s2, k)))
    return applicable, same_support
