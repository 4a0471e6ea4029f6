"""Theme-routed subsequence extraction.

Every sequence element is scored by the router; element j joins the
subsequence of every expert in its gate support, preserving chronological
order. With k=1 the subsequences partition the positions; in general each
position appears in exactly min(k, n) of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError, RoutingError
from ..numerics.core import ZERO_NORM_EPS
from ..router.theme import ThemeRouter, gate, project_rows, scores_from_projection


@dataclass
class Subsequence:
    expert: int
    positions: np.ndarray  # ascending original positions
    embeddings: np.ndarray  # rows parallel to positions


@dataclass
class DispatchResult:
    subsequences: list[Subsequence]
    gates: np.ndarray  # (t, n)
    scores: np.ndarray  # (t, n) cosine relevance
    projections: np.ndarray  # (t, D)
    projection_cache: list  # batched MLP cache for the backward pass


def dispatch(router: ThemeRouter, seq_embeddings: np.ndarray) -> DispatchResult:
    X = np.asarray(seq_embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ArgumentError("dispatch requires a non-empty (t, d) sequence")
    t = X.shape[0]
    n = router.n_experts
    projections, cache = project_rows(router, X)
    norms = np.linalg.norm(projections, axis=1)
    bad = np.flatnonzero(norms <= ZERO_NORM_EPS)
    if bad.size:
        raise RoutingError(f"zero-norm theme projection at sequence position {int(bad[0])}")
    row_norms = np.linalg.norm(router.codebook.weights, axis=1)
    scores = np.clip(
        (projections @ router.codebook.weights.T) / (norms[:, None] * row_norms[None, :]),
        -1.0,
        1.0,
    )
    gates = np.stack([gate(scores[j], router.top_k) for j in range(t)])
    subsequences = []
    for i in range(n):
        positions = np.flatnonzero(gates[:, i] > 0.0)
        subsequences.append(Subsequence(i, positions, X[positions]))
    return DispatchResult(subsequences, gates, scores, projections, cache)


def extract_subsequences(router: ThemeRouter, seq_embeddings: np.ndarray) -> list[Subsequence]:
    """One subsequence per expert (possibly empty), chronological order kept."""
    return dispatch(router, seq_embeddings).subsequences


def last_element_scores(result: DispatchResult, router: ThemeRouter) -> np.ndarray:
    return scores_from_projection(result.projections[-1], router.codebook, context="final element")
