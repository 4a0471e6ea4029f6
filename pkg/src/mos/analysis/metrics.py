"""Ranking metrics: AUC (average ranks for ties) and pair-weighted GAUC."""

from __future__ import annotations

import numpy as np

from ..exceptions import MetricUndefinedError


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """Ascending 1-based ranks; tied scores share the mean of their ranks."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    i = 0
    while i < order.shape[0]:
        j = i
        while j + 1 < order.shape[0] and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties half).

    Computed with the rank formula
    (sum of positive ranks - n_pos*(n_pos+1)/2) / (n_pos * n_neg),
    which matches the pairwise definition with 1/2 credit for ties.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise MetricUndefinedError("scores and labels must be 1-d and aligned")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos + n_neg != y.shape[0]:
        raise MetricUndefinedError("labels must be 0/1")
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("AUC needs at least one positive and one negative")
    ranks = _average_ranks(s)
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def gauc(groups) -> float:
    """Weighted mean of per-group AUCs, weights n_pos * n_neg.

    Groups lacking a positive or a negative are skipped; raises when no
    group qualifies.
    """
    total_weight = 0.0
    total = 0.0
    for scores, labels in groups:
        y = np.asarray(labels)
        n_pos = int((y == 1).sum())
        n_neg = int((y == 0).sum())
        if n_pos == 0 or n_neg == 0:
            continue
        weight = float(n_pos * n_neg)
        total += weight * auc(scores, labels)
        total_weight += weight
    if total_weight == 0.0:
        raise MetricUndefinedError("GAUC: no group contains both classes")
    return total / total_weight
