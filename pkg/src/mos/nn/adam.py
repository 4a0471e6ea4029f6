"""Adam with bias correction over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ArgumentError


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
) -> None:
    """One bias-corrected update, in place, over every tensor in ``params``.

    Tensors without a gradient entry are treated as zero-gradient (their
    moments still decay). Moments are lazily allocated, so a parameter may
    join the trainable set at any step.
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    scale1 = 1.0 / (1.0 - b1**t)
    scale2 = 1.0 / (1.0 - b2**t)
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        elif g.shape != p.shape:
            raise ArgumentError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m * scale1) / (np.sqrt(v * scale2) + state.eps)
