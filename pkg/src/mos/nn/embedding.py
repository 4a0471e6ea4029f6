"""Item embedding table with strict id checking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exceptions import EmbeddingLookupError
from ..numerics.rng import RngStream


@dataclass
class EmbeddingTable:
    weights: np.ndarray  # (vocab, d)

    @property
    def vocab_size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def named_arrays(self, prefix: str):
        yield f"{prefix}.weights", self.weights


def init_embedding(vocab_size: int, dim: int, rng: RngStream) -> EmbeddingTable:
    bound = 1.0 / np.sqrt(dim)
    return EmbeddingTable(rng.generator().uniform(-bound, bound, size=(vocab_size, dim)))


def embed(table: EmbeddingTable, items: Sequence[int] | np.ndarray) -> np.ndarray:
    """Rows of the table in sequence order; unknown ids are an error."""
    ids = np.asarray(items, dtype=np.int64)
    if ids.size == 0:
        return np.empty((0, table.dim), dtype=np.float64)
    bad = (ids < 0) | (ids >= table.vocab_size)
    if bad.any():
        offender = int(ids[bad][0])
        raise EmbeddingLookupError(
            f"item id {offender} outside table of size {table.vocab_size}"
        )
    return table.weights[ids]
