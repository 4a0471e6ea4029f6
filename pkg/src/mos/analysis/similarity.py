"""Self-similarity matrices and session-boundary detection.

A user's history is summarized by the matrix of pairwise cosine
similarities of its item embeddings; session-hopping shows up as bright
blocks (stable interests) with sharp edges (abrupt shifts) and repeated
off-diagonal blocks (reappearing interests). Boundaries are detected where
the mean similarity between the w items before and the w items after a
position drops below a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ArgumentError, DomainError
from ..numerics.core import ZERO_NORM_EPS


@dataclass
class SimilarityMatrix:
    matrix: np.ndarray  # (t, t) cosines
    boundaries: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return self.matrix.shape[0]


def self_similarity(seq_embeddings: np.ndarray) -> SimilarityMatrix:
    X = np.asarray(seq_embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ArgumentError("self_similarity requires a non-empty (t, d) array")
    norms = np.linalg.norm(X, axis=1)
    bad = np.flatnonzero(norms <= ZERO_NORM_EPS)
    if bad.size:
        raise DomainError(f"zero embedding at position {int(bad[0])}")
    unit = X / norms[:, None]
    M = np.clip(unit @ unit.T, -1.0, 1.0)
    return SimilarityMatrix(M)


def detect_sessions(sim: SimilarityMatrix, window: int = 3, threshold: float = 0.5) -> list[int]:
    """Boundary positions: index of the first element of each new session.

    Position p is flagged when the mean cosine between blocks [p-w, p) and
    [p, p+w) (truncated at the edges) falls below the threshold; runs of
    flags within w of each other merge to the minimum-similarity position.
    """
    if window < 1:
        raise ArgumentError("window must be >= 1")
    if not (-1.0 < threshold < 1.0):
        raise ArgumentError("threshold must lie in (-1, 1)")
    M = sim.matrix
    t = M.shape[0]
    flagged: list[tuple[int, float]] = []
    for p in range(1, t):
        left = M[max(0, p - window) : p, p : min(t, p + window)]
        contrast = float(left.mean())
        if contrast < threshold:
            flagged.append((p, contrast))
    merged: list[int] = []
    i = 0
    while i < len(flagged):
        j = i
        while j + 1 < len(flagged) and flagged[j + 1][0] - flagged[j][0] <= window:
            j += 1
        cluster = flagged[i : j + 1]
        merged.append(min(cluster, key=lambda pc: pc[1])[0])
        i = j + 1
    return merged


def boundary_recall_precision(
    detected: list[int], truth: np.ndarray, tolerance: int = 1
) -> tuple[float, float]:
    """Fraction of true boundaries matched within +-tolerance, and the
    fraction of detections that match some true boundary."""
    truth = np.asarray(truth, dtype=np.int64)
    det = np.asarray(detected, dtype=np.int64)
    if truth.size == 0:
        return 1.0, 1.0 if det.size == 0 else 0.0
    hit = sum(1 for b in truth if det.size and np.abs(det - b).min() <= tolerance)
    good = sum(1 for p in det if np.abs(truth - p).min() <= tolerance)
    recall = hit / truth.size
    precision = 1.0 if det.size == 0 else good / det.size
    return recall, precision
