"""Plain multilayer perceptron with explicit forward/backward.

Row-vector convention throughout: ``y = x @ W + b`` with ``W`` shaped
(fan_in, fan_out). Activations are per-layer tags; only "relu" and
"identity" exist here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ArgumentError
from ..numerics.rng import RngStream

_ACTIVATIONS = ("relu", "identity")


@dataclass
class MlpParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ArgumentError("weights, biases and activations must align per layer")
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ArgumentError(f"layer {i}: weight {w.shape} incompatible with bias {b.shape}")
            if act not in _ACTIVATIONS:
                raise ArgumentError(f"layer {i}: unknown activation {act!r}")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ArgumentError(
                    f"layer {i}: fan-in {w.shape[0]} does not chain from previous fan-out"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def named_arrays(self, prefix: str):
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"{prefix}.w{i}", w
            yield f"{prefix}.b{i}", b


def init_mlp(dims: list[int], activations: list[str], rng: RngStream) -> MlpParams:
    """Uniform +-1/sqrt(fan_in) initialization for weights and biases.

    Nonzero biases keep small ReLU layers away from the all-dead state
    (which would make a zero output vector, a domain error for cosine
    scoring downstream).
    """
    gen = rng.generator()
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(gen.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(gen.uniform(-bound, bound, size=fan_out))
    return MlpParams(weights, biases, list(activations))


def mlp_forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Forward a single vector (or a stack of row vectors) through the MLP."""
    out, _ = mlp_forward_cached(params, np.atleast_2d(np.asarray(x, dtype=np.float64)))
    return out[0] if np.asarray(x).ndim == 1 else out


def mlp_forward_cached(params: MlpParams, rows: np.ndarray) -> tuple[np.ndarray, list]:
    """Batched forward over row vectors, keeping pre-activation caches."""
    h = np.asarray(rows, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != params.in_dim:
        raise ArgumentError(
            f"input rows of dim {h.shape[-1] if h.ndim else '?'} do not match fan-in {params.in_dim}"
        )
    cache = [h]
    for w, b, act in zip(params.weights, params.biases, params.activations):
        pre = h @ w + b
        cache.append(pre)
        h = np.maximum(pre, 0.0) if act == "relu" else pre
        cache.append(h)
    return h, cache


def mlp_backward(
    params: MlpParams, cache: list, d_out: np.ndarray, grads: dict[str, np.ndarray], prefix: str
) -> np.ndarray:
    """Backprop through a cached forward; accumulates into ``grads``.

    ``d_out`` has the same shape as the forward output rows. Returns the
    gradient with respect to the input rows.
    """
    dh = np.atleast_2d(np.asarray(d_out, dtype=np.float64))
    n_layers = len(params.weights)
    for i in range(n_layers - 1, -1, -1):
        pre = cache[1 + 2 * i]
        inp = cache[2 * i]
        if params.activations[i] == "relu":
            dh = dh * (pre > 0.0)
        _accumulate(grads, f"{prefix}.w{i}", inp.T @ dh)
        _accumulate(grads, f"{prefix}.b{i}", dh.sum(axis=0))
        dh = dh @ params.weights[i].T
    return dh


def _accumulate(grads: dict[str, np.ndarray], name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = np.array(value, dtype=np.float64)
