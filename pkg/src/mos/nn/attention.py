"""Reference expert block: single-head self-attention + feedforward, pool-last.

The block output is the post-block representation of the final position.
Because attention is the only cross-position mixing and both layer norms and
the feedforward act position-wise, the output depends on the other positions
only through the final position's attention row; the forward therefore
computes just that row (the function value is identical to materializing the
full score matrix, which is still what the FLOPs conventions charge for).

This module is the pure-python backend; ``mos._kernels`` provides a compiled
drop-in with the same signatures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError
from ..numerics.rng import RngStream
from .mlp import MlpParams, init_mlp

LAYER_NORM_EPS = 1e-5


@dataclass
class AttentionBlockParams:
    w_query: np.ndarray
    w_key: np.ndarray
    w_value: np.ndarray
    w_output: np.ndarray
    ffn: MlpParams
    ln1_scale: np.ndarray
    ln1_shift: np.ndarray
    ln2_scale: np.ndarray
    ln2_shift: np.ndarray

    def __post_init__(self):
        d = self.w_query.shape[0]
        for name in ("w_query", "w_key", "w_value", "w_output"):
            m = getattr(self, name)
            if m.shape != (d, d):
                raise ArgumentError(f"{name} must be {d}x{d}, got {m.shape}")
        if self.ffn.in_dim != d or self.ffn.out_dim != d:
            raise ArgumentError("feedforward must map d -> d")

    @property
    def dim(self) -> int:
        return self.w_query.shape[0]

    @property
    def ffn_hidden(self) -> int:
        return self.ffn.weights[0].shape[1]

    def named_arrays(self, prefix: str):
        for name in ("w_query", "w_key", "w_value", "w_output",
                     "ln1_scale", "ln1_shift", "ln2_scale", "ln2_shift"):
            yield f"{prefix}.{name}", getattr(self, name)
        yield from self.ffn.named_arrays(f"{prefix}.ffn")


def init_attention_block(d: int, ffn_hidden: int, rng: RngStream) -> AttentionBlockParams:
    gen = rng.generator()
    bound = 1.0 / np.sqrt(d)
    proj = lambda: gen.uniform(-bound, bound, size=(d, d))
    return AttentionBlockParams(
        w_query=proj(),
        w_key=proj(),
        w_value=proj(),
        w_output=proj(),
        ffn=init_mlp([d, ffn_hidden, d], ["relu", "identity"], rng.substream(1)),
        ln1_scale=np.ones(d),
        ln1_shift=np.zeros(d),
        ln2_scale=np.ones(d),
        ln2_shift=np.zeros(d),
    )


def _layer_norm(x: np.ndarray, scale: np.ndarray, shift: np.ndarray):
    mu = x.mean()
    centered = x - mu
    inv = 1.0 / np.sqrt(np.mean(centered * centered) + LAYER_NORM_EPS)
    xhat = centered * inv
    return scale * xhat + shift, (xhat, inv)


def _layer_norm_backward(dy: np.ndarray, scale: np.ndarray, cache):
    xhat, inv = cache
    dxhat = dy * scale
    dx = inv * (dxhat - dxhat.mean() - xhat * np.mean(dxhat * xhat))
    return dx, dy * xhat, dy.copy()


def block_forward(params: AttentionBlockParams, X: np.ndarray):
    """Run the block over a (t, d) sequence; returns (output (d,), cache)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ArgumentError("block_forward requires a non-empty (t, d) sequence")
    if X.shape[1] != params.dim:
        raise ArgumentError(f"sequence dim {X.shape[1]} != block dim {params.dim}")
    d = params.dim
    q = X[-1] @ params.w_query
    K = X @ params.w_key
    V = X @ params.w_value
    s = (K @ q) / np.sqrt(d)
    s -= s.max()
    e = np.exp(s)
    a = e / e.sum()
    c = a @ V
    o = c @ params.w_output
    r1 = X[-1] + o
    z1, ln1c = _layer_norm(r1, params.ln1_scale, params.ln1_shift)
    w1, b1 = params.ffn.weights[0], params.ffn.biases[0]
    w2, b2 = params.ffn.weights[1], params.ffn.biases[1]
    hpre = z1 @ w1 + b1
    hact = np.maximum(hpre, 0.0)
    f = hact @ w2 + b2
    r2 = z1 + f
    z2, ln2c = _layer_norm(r2, params.ln2_scale, params.ln2_shift)
    cache = (X, q, K, V, a, c, z1, hpre, hact, ln1c, ln2c)
    return z2, cache


def block_backward(params: AttentionBlockParams, cache, d_out: np.ndarray):
    """Gradients of a scalar loss through the block output.

    Returns (dX (t, d), grads) with grads keyed like ``named_arrays("")``
    without the leading dot.
    """
    X, q, K, V, a, c, z1, hpre, hact, ln1c, ln2c = cache
    d = params.dim
    grads: dict[str, np.ndarray] = {}

    dr2, dg2, db2 = _layer_norm_backward(np.asarray(d_out, dtype=np.float64),
                                         params.ln2_scale, ln2c)
    grads["ln2_scale"] = dg2
    grads["ln2_shift"] = db2
    dz1 = dr2.copy()
    df = dr2

    w1, w2 = params.ffn.weights
    grads["ffn.b1"] = df.copy()
    grads["ffn.w1"] = np.outer(hact, df)
    dhact = df @ w2.T
    dhpre = dhact * (hpre > 0.0)
    grads["ffn.b0"] = dhpre.copy()
    grads["ffn.w0"] = np.outer(z1, dhpre)
    dz1 += dhpre @ w1.T

    dr1, dg1, db1 = _layer_norm_backward(dz1, params.ln1_scale, ln1c)
    grads["ln1_scale"] = dg1
    grads["ln1_shift"] = db1

    dX = np.zeros_like(X)
    dX[-1] += dr1
    do = dr1
    grads["w_output"] = np.outer(c, do)
    dc = do @ params.w_output.T
    da = V @ dc
    ds = a * (da - float(a @ da))
    ds /= np.sqrt(d)
    dq = ds @ K
    grads["w_query"] = np.outer(X[-1], dq)
    dX[-1] += dq @ params.w_query.T
    grads["w_key"] = np.outer(ds @ X, q)
    dX += np.outer(ds, q @ params.w_key.T)
    grads["w_value"] = np.outer(a @ X, dc)
    dX += np.outer(a, dc @ params.w_value.T)
    return dX, grads


def attention_weights(params: AttentionBlockParams, X: np.ndarray) -> np.ndarray:
    """Full (t, t) attention matrix; diagnostic only, not on the hot path."""
    X = np.asarray(X, dtype=np.float64)
    Q = X @ params.w_query
    K = X @ params.w_key
    S = (Q @ K.T) / np.sqrt(params.dim)
    S -= S.max(axis=1, keepdims=True)
    E = np.exp(S)
    return E / E.sum(axis=1, keepdims=True)
