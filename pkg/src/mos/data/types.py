"""Dataset containers shared by generation, ingestion and training."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INTERACTION_LABEL = -1  # event rows that are history only, never targets


@dataclass(eq=False)
class Impression:
    user_id: int
    sequence: np.ndarray  # chronological item ids, non-empty
    target: int
    label: int
    event_index: int = -1  # position of the target row in the user's event log


def impressions_equal(a: Impression, b: Impression) -> bool:
    return (
        a.user_id == b.user_id
        and a.target == b.target
        and a.label == b.label
        and np.array_equal(a.sequence, b.sequence)
    )


@dataclass
class UserEvents:
    user_id: int
    items: np.ndarray  # (T,) int64
    timestamps: np.ndarray  # (T,) int64
    labels: np.ndarray  # (T,) int64: -1 interaction, 0/1 impression row


@dataclass
class LabeledDataset:
    impressions: list[Impression]
    events: list[UserEvents]
    n_items: int
    item_themes: np.ndarray | None = None  # ground truth: item id -> theme
    item_vectors: np.ndarray | None = None  # ground truth item embeddings
    boundaries: dict[int, np.ndarray] | None = None  # per user, theme-change
    # positions in the history-eligible item sequence
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return len(self.events)


def eligible_history(events: UserEvents) -> np.ndarray:
    """Items that enter downstream histories: interactions plus clicked rows."""
    mask = events.labels != 0
    return events.items[mask]


def build_impressions(events: UserEvents, max_seq: int) -> list[Impression]:
    """Derive impressions from an event log.

    Every labeled row (0/1) becomes a target; its sequence is the up-to-
    ``max_seq`` most recent preceding history-eligible items. Rows with no
    history yield no impression.
    """
    out: list[Impression] = []
    history: list[int] = []
    for idx in range(events.items.shape[0]):
        label = int(events.labels[idx])
        item = int(events.items[idx])
        if label in (0, 1) and history:
            seq = np.array(history[-max_seq:], dtype=np.int64)
            out.append(Impression(events.user_id, seq, item, label, event_index=idx))
        if label != 0:
            history.append(item)
    return out
