"""Deterministic random streams.

A stream is identified by ``(seed, stream)``; the same pair yields the same
draw sequence on every platform (PCG64 via numpy's SeedSequence). Streams
are cheap value objects: ``generator()`` builds a fresh generator each call,
so an ``RngStream`` can be passed around and reused without hidden state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < _U64):
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (0 <= int(self.stream) < _U64):
            raise ArgumentError(f"stream id must be a 64-bit unsigned integer, got {self.stream}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([int(self.seed), int(self.stream)]))
        )

    def substream(self, offset: int) -> "RngStream":
        """Derived stream for parallel-safe independent draws.

        Callers are responsible for keeping offsets distinct; the mapping is
        a fixed affine step so derived ids never collide for offsets < 2**20.
        """
        if offset < 0:
            raise ArgumentError("substream offset must be nonnegative")
        return RngStream(self.seed, (int(self.stream) * (2**20) + 1 + int(offset)) % _U64)
