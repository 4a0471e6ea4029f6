"""Sliding-window transform: items -> mean-pooled window sequence.

Windows of size L advance by stride s while they fit. Two edge rules keep
every item covered: a sequence shorter than L becomes a single whole-
sequence window, and when the last fitting window ends before the final
item a tail window over the last L positions is appended (the final window
drives the aggregation gate, so recent behavior must not be dropped).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError


@dataclass(frozen=True)
class WindowSpec:
    size: int
    stride: int

    def __post_init__(self):
        if self.size < 1 or self.stride < 1:
            raise ArgumentError("window size and stride must be >= 1")


@dataclass
class WindowSequence:
    embeddings: np.ndarray  # (m, d) mean of member items
    starts: list[int]  # 0-based first position of each window
    members: list[np.ndarray]  # member positions per window

    def __len__(self) -> int:
        return self.embeddings.shape[0]


def window_positions(t: int, spec: WindowSpec) -> list[np.ndarray]:
    if t < 1:
        raise ArgumentError("window_positions requires a non-empty sequence")
    L, s = spec.size, spec.stride
    if t < L:
        return [np.arange(t)]
    members = []
    m = 0
    while m * s + L <= t:
        members.append(np.arange(m * s, m * s + L))
        m += 1
    if members[-1][-1] != t - 1:
        members.append(np.arange(t - L, t))
    return members


def window_transform(seq_embeddings: np.ndarray, spec: WindowSpec) -> WindowSequence:
    X = np.asarray(seq_embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ArgumentError("window_transform requires a non-empty (t, d) sequence")
    members = window_positions(X.shape[0], spec)
    means = np.stack([X[m].mean(axis=0) for m in members])
    return WindowSequence(means, [int(m[0]) for m in members], members)


def window_transform_backward(
    win_seq: WindowSequence, d_windows: np.ndarray, dX: np.ndarray
) -> None:
    """Scatter window-embedding gradients back to item rows (in place)."""
    for m, dw in zip(win_seq.members, np.asarray(d_windows, dtype=np.float64)):
        dX[m] += dw / len(m)
