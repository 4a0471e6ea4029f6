"""Item-level dispatch behavior of a trained router.

For every item appearing at least ``min_occurrences`` times across
impression sequences, tally which experts its appearances are dispatched
to. The theme router scores depend only on the item embedding, so a given
checkpoint routes an item identically on every appearance; spread across
experts therefore directly exposes router indecision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.types import LabeledDataset
from ..model.mos_model import MosModel
from ..router.theme import gate, gate_support, theme_scores


@dataclass
class RoutingHistogram:
    item_id: int
    occurrences: int
    dispatch_counts: np.ndarray  # (n_experts,), sums to occurrences * k


def routing_histogram(
    model: MosModel, dataset: LabeledDataset, min_occurrences: int = 8
) -> tuple[list[RoutingHistogram], RoutingHistogram | None, RoutingHistogram | None]:
    """Histograms for qualifying items plus the most/least frequent ones."""
    counts: dict[int, int] = {}
    for imp in dataset.impressions:
        for item in imp.sequence:
            counts[int(item)] = counts.get(int(item), 0) + 1
    n = model.config.n_experts
    k = model.config.top_k
    histograms: list[RoutingHistogram] = []
    for item in sorted(counts):
        occ = counts[item]
        if occ < min_occurrences:
            continue
        support = gate_support(
            gate(theme_scores(model.item_router, model.embedding.weights[item]), k)
        )
        dispatch = np.zeros(n, dtype=np.int64)
        dispatch[support] = occ
        histograms.append(RoutingHistogram(item, occ, dispatch))
    if not histograms:
        return [], None, None
    most = max(histograms, key=lambda hist: (hist.occurrences, -hist.item_id))
    least = min(histograms, key=lambda hist: (hist.occurrences, hist.item_id))
    return histograms, most, least


def modal_share(hist: RoutingHistogram) -> float:
    """Share of dispatches landing on the item's most used expert."""
    total = int(hist.dispatch_counts.sum())
    return float(hist.dispatch_counts.max()) / total if total else 0.0


def theme_routing_purity(
    histograms: list[RoutingHistogram], item_themes: np.ndarray, n_experts: int
) -> float:
    """Mean over themes of the dispatch share captured by the theme's modal
    expert (1.0 = every theme owns one expert)."""
    themes = np.asarray(item_themes)
    n_themes = int(themes.max()) + 1
    table = np.zeros((n_themes, n_experts), dtype=np.float64)
    for hist in histograms:
        table[int(themes[hist.item_id])] += hist.dispatch_counts
    shares = []
    for row in table:
        total = row.sum()
        if total > 0:
            shares.append(row.max() / total)
    return float(np.mean(shares)) if shares else 0.0
