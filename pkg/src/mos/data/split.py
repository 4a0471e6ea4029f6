"""Temporal train/validation/test splitting, per user."""

from __future__ import annotations

import math

from ..exceptions import ArgumentError
from .types import LabeledDataset


def split(
    dataset: LabeledDataset, ratios: tuple[float, float, float]
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Earliest impressions to train, latest to test, per user.

    Zero ratios produce empty splits; otherwise every user with >= 3
    impressions contributes at least one impression to each split.
    """
    r_train, r_val, r_test = ratios
    if min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ArgumentError(f"ratios must be nonnegative and sum to 1, got {ratios}")
    if r_train <= 0:
        raise ArgumentError("train ratio must be positive")

    per_user: dict[int, list] = {}
    for imp in dataset.impressions:
        per_user.setdefault(imp.user_id, []).append(imp)

    parts: tuple[list, list, list] = ([], [], [])
    for user in sorted(per_user):
        imps = per_user[user]  # already chronological per construction
        m = len(imps)
        n_test = 0 if r_test == 0 else max(1, math.floor(m * r_test))
        n_val = 0 if r_val == 0 else max(1, math.floor(m * r_val))
        if n_test + n_val >= m:  # too few impressions: favor train
            n_test = min(n_test, max(0, m - 1))
            n_val = min(n_val, max(0, m - 1 - n_test))
        n_train = m - n_val - n_test
        parts[0].extend(imps[:n_train])
        parts[1].extend(imps[n_train : n_train + n_val])
        parts[2].extend(imps[n_train + n_val :])

    def _wrap(imps: list) -> LabeledDataset:
        return LabeledDataset(
            impressions=imps,
            events=dataset.events,
            n_items=dataset.n_items,
            item_themes=dataset.item_themes,
            item_vectors=dataset.item_vectors,
            boundaries=dataset.boundaries,
            meta=dict(dataset.meta),
        )

    return _wrap(parts[0]), _wrap(parts[1]), _wrap(parts[2])
