"""Binary cross-entropy on logits, with its gradient."""

from __future__ import annotations

import math

from ..exceptions import ArgumentError


def sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def bce_loss(logit: float, label: int) -> tuple[float, float]:
    """Stable BCE: loss = log(1 + exp(-(2*label-1)*logit)), grad = sigmoid - label."""
    if label not in (0, 1):
        raise ArgumentError(f"label must be 0 or 1, got {label!r}")
    m = -(2.0 * label - 1.0) * float(logit)
    # log(1 + e^m) without overflow for large |m|
    loss = m + math.log1p(math.exp(-m)) if m > 0 else math.log1p(math.exp(m))
    return loss, sigmoid(float(logit)) - float(label)
