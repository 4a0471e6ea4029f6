"""Small deterministic linear-algebra primitives.

Everything operates on 64-bit floats. ``NEG_INF`` is the reserved mask
sentinel used by top-k gating: it never arises from arithmetic here and
``softmax`` maps it to an exact zero.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..exceptions import ArgumentError, DomainError

NEG_INF = float("-inf")

ZERO_NORM_EPS = 1e-12


def as_vector(v: Sequence[float] | np.ndarray) -> np.ndarray:
    out = np.asarray(v, dtype=np.float64)
    if out.ndim != 1:
        raise ArgumentError(f"expected a 1-d vector, got shape {out.shape}")
    return out


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between ``a`` and ``b``, clamped to [-1, 1].

    Raises DomainError naming the offending argument when either vector has
    norm <= 1e-12 (the result would be meaningless).
    """
    va, vb = as_vector(a), as_vector(b)
    if va.shape != vb.shape:
        raise ArgumentError(f"length mismatch: {va.shape[0]} vs {vb.shape[0]}")
    if not (np.isfinite(va).all() and np.isfinite(vb).all()):
        raise DomainError("cosine_similarity requires finite inputs")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na <= ZERO_NORM_EPS:
        raise DomainError("cosine_similarity: argument 'a' has zero norm")
    if nb <= ZERO_NORM_EPS:
        raise DomainError("cosine_similarity: argument 'b' has zero norm")
    return float(np.clip(float(va @ vb) / (na * nb), -1.0, 1.0))


def softmax(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Numerically stable softmax treating ``NEG_INF`` entries as exact masks.

    Masked entries come out exactly 0; the remaining entries are positive and
    sum to 1 within 1e-12.
    """
    x = as_vector(v)
    mask = x == NEG_INF
    if mask.all():
        raise DomainError("softmax: all entries are the -inf sentinel")
    live = x[~mask]
    if not np.isfinite(live).all():
        raise DomainError("softmax: non-sentinel entries must be finite")
    shifted = live - live.max()
    e = np.exp(shifted)
    out = np.zeros_like(x)
    out[~mask] = e / e.sum()
    return out


def keep_top_k(v: Sequence[float] | np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries in place, set the rest to ``NEG_INF``.

    Ties break toward the lower index (stable sort on descending value).
    """
    x = as_vector(v)
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ArgumentError(f"k must be in [1, {n}], got {k}")
    order = np.argsort(-x, kind="stable")
    out = np.full(n, NEG_INF)
    keep = order[:k]
    out[keep] = x[keep]
    return out


def top_k_indices(v: Sequence[float] | np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, lower index winning ties, ascending."""
    x = as_vector(v)
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ArgumentError(f"k must be in [1, {n}], got {k}")
    order = np.argsort(-x, kind="stable")
    return np.sort(order[:k])


def finite_diff_gradient(
    f: Callable[[np.ndarray], float], x: Sequence[float] | np.ndarray, eps: float
) -> np.ndarray:
    """Central-difference gradient oracle: (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps)."""
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    x0 = as_vector(x).copy()
    grad = np.empty_like(x0)
    for i in range(x0.shape[0]):
        orig = x0[i]
        x0[i] = orig + eps
        up = float(f(x0))
        x0[i] = orig - eps
        down = float(f(x0))
        x0[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise DomainError(f"finite_diff_gradient: non-finite evaluation at coordinate {i}")
        grad[i] = (up - down) / (2.0 * eps)
    return grad
