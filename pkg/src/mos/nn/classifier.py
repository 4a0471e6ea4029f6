"""Classifier head: scores a (user representation, target embedding) pair."""

from __future__ import annotations

import numpy as np

from ..exceptions import ArgumentError
from .mlp import MlpParams, mlp_backward, mlp_forward_cached


def classifier_forward(head: MlpParams, user_repr: np.ndarray, target_emb: np.ndarray):
    """Concatenate [user_repr ; target_emb], apply the head, return (logit, cache)."""
    u = np.asarray(user_repr, dtype=np.float64)
    t = np.asarray(target_emb, dtype=np.float64)
    joint = np.concatenate([u, t])
    if joint.shape[0] != head.in_dim:
        raise ArgumentError(
            f"classifier expects input of dim {head.in_dim}, got {joint.shape[0]}"
        )
    if head.out_dim != 1:
        raise ArgumentError("classifier head must produce a single logit")
    out, cache = mlp_forward_cached(head, joint[None, :])
    return float(out[0, 0]), cache


def classifier_backward(
    head: MlpParams, cache, d_logit: float, grads: dict[str, np.ndarray], prefix: str
):
    """Returns (d_user_repr, d_target_emb); accumulates head grads."""
    d_in = mlp_backward(head, cache, np.array([[d_logit]]), grads, prefix)[0]
    half = d_in.shape[0] // 2
    return d_in[:half], d_in[half:]
