"""Theme codebook: EMA-maintained rows, never touched by gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..exceptions import ArgumentError
from ..numerics.core import ZERO_NORM_EPS, cosine_similarity


@dataclass
class Codebook:
    weights: np.ndarray  # (n, D)
    ema_decay: float = 0.999
    usage: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] < 1:
            raise ArgumentError(f"codebook must be (n, D) with n >= 1, got {self.weights.shape}")
        if not (0.0 < self.ema_decay < 1.0):
            raise ArgumentError(f"ema decay must lie in (0, 1), got {self.ema_decay}")
        norms = np.linalg.norm(self.weights, axis=1)
        if (norms <= ZERO_NORM_EPS).any():
            raise ArgumentError("codebook rows must have norm > 1e-12")
        if self.usage is None:
            self.usage = np.zeros(self.weights.shape[0], dtype=np.int64)

    @property
    def n_experts(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def ema_update(
    codebook: Codebook,
    routed: Iterable[tuple[np.ndarray, np.ndarray]],
) -> Codebook:
    """Pull each row toward the mean projection of the items routed to it.

    ``routed`` yields (theme-space vector, gate vector) pairs for one batch.
    Rows with no routed item are left untouched; usage counters grow by the
    routed counts. An empty batch is a no-op.
    """
    n, dim = codebook.n_experts, codebook.dim
    sums = np.zeros((n, dim), dtype=np.float64)
    counts = np.zeros(n, dtype=np.int64)
    for vec, gate_vec in routed:
        v = np.asarray(vec, dtype=np.float64)
        g = np.asarray(gate_vec, dtype=np.float64)
        if v.shape != (dim,):
            raise ArgumentError(f"theme vector of dim {v.shape} does not match codebook dim {dim}")
        if g.shape != (n,):
            raise ArgumentError(f"gate of length {g.shape} does not match {n} experts")
        selected = g > 0.0
        sums[selected] += v
        counts[selected] += 1
    return apply_ema(codebook, sums, counts)


def apply_ema(codebook: Codebook, sums: np.ndarray, counts: np.ndarray) -> Codebook:
    """EMA step from pre-aggregated per-expert sums/counts (training fast path)."""
    gamma = codebook.ema_decay
    for i in range(codebook.n_experts):
        if counts[i] > 0:
            mean = sums[i] / counts[i]
            codebook.weights[i] = gamma * codebook.weights[i] + (1.0 - gamma) * mean
    codebook.usage += counts.astype(np.int64)
    return codebook


def collapse_metric(codebook: Codebook) -> float:
    """Maximum pairwise cosine similarity among codebook rows.

    Values near 1 mean two themes have merged; the training loop warns
    above 0.95.
    """
    n = codebook.n_experts
    if n < 2:
        raise ArgumentError("collapse_metric needs at least 2 codebook rows")
    worst = -1.0
    for i in range(n):
        for j in range(i + 1, n):
            worst = max(worst, cosine_similarity(codebook.weights[i], codebook.weights[j]))
    return worst
