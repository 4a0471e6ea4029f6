from .core import (
    NEG_INF,
    ZERO_NORM_EPS,
    cosine_similarity,
    finite_diff_gradient,
    keep_top_k,
    softmax,
    top_k_indices,
)
from .kmeans import kmeans
from .rng import RngStream

__all__ = [
    "NEG_INF",
    "ZERO_NORM_EPS",
    "cosine_similarity",
    "finite_diff_gradient",
    "keep_top_k",
    "kmeans",
    "softmax",
    "top_k_indices",
    "RngStream",
]
