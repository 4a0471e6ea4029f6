"""The three expert scales: global, item-level, window-level.

Item and window groups share the same structure: dispatch the sequence into
per-theme subsequences, run one expert block per *selected* expert (selection
comes from the gate of the final element), and combine the outputs with the
gate weights. Non-selected experts are never evaluated. Gradients flow to
the router projection only through the final element's gate weights; the
top-k selection itself is non-differentiable and held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import backend
from ..exceptions import ArgumentError
from ..nn.attention import AttentionBlockParams
from ..nn.mlp import mlp_backward
from ..router.theme import ThemeRouter, gate_support
from .dispatch import DispatchResult, dispatch
from .windows import WindowSequence, window_transform_backward


@dataclass
class GroupCache:
    result: DispatchResult
    agg_gate: np.ndarray
    support: np.ndarray
    expert_outputs: dict[int, np.ndarray]
    expert_caches: dict[int, tuple]
    output: np.ndarray
    window_seq: WindowSequence | None = None

    @property
    def selected_lengths(self) -> dict[int, int]:
        return {int(i): len(self.result.subsequences[i].positions) for i in self.support}


def global_expert_forward(params: AttentionBlockParams, seq_embeddings: np.ndarray):
    """Whole-sequence expert; returns (y_G, block cache)."""
    X = np.asarray(seq_embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ArgumentError("global expert requires a non-empty sequence")
    return backend.block_forward(params, X)


def global_expert_backward(params, cache, d_out, grads, prefix):
    dX, block_grads = backend.block_backward(params, cache, d_out)
    _merge(grads, block_grads, prefix)
    return dX


def _grouped_forward(router: ThemeRouter, experts, result: DispatchResult) -> GroupCache:
    agg = result.gates[-1]
    support = gate_support(agg)
    outputs: dict[int, np.ndarray] = {}
    caches: dict[int, tuple] = {}
    y = None
    t_last = result.gates.shape[0] - 1
    for i in support:
        i = int(i)
        sub = result.subsequences[i]
        # the final element selects only experts whose subsequence contains it
        assert sub.positions.size and sub.positions[-1] == t_last, (
            "selected expert received a subsequence without the final element"
        )
        out, cache = backend.block_forward(experts[i], sub.embeddings)
        outputs[i] = out
        caches[i] = cache
        contrib = agg[i] * out
        y = contrib if y is None else y + contrib
    return GroupCache(result, agg, support, outputs, caches, y)


def _grouped_backward(
    router: ThemeRouter,
    experts,
    cache: GroupCache,
    d_out: np.ndarray,
    grads: dict[str, np.ndarray],
    expert_prefix: str,
    router_prefix: str,
) -> np.ndarray:
    res = cache.result
    t = res.gates.shape[0]
    dX = np.zeros((t, res.projection_cache[0].shape[1]))
    d_gate = np.zeros(router.n_experts)
    for i in cache.support:
        i = int(i)
        du = cache.agg_gate[i] * d_out
        d_sub, block_grads = backend.block_backward(experts[i], cache.expert_caches[i], du)
        dX[res.subsequences[i].positions] += d_sub
        _merge(grads, block_grads, f"{expert_prefix}.{i}")
        d_gate[i] = float(d_out @ cache.expert_outputs[i])
    # gate -> scores (softmax over the fixed support)
    g_sup = cache.agg_gate[cache.support]
    dg_sup = d_gate[cache.support]
    inner = float(g_sup @ dg_sup)
    d_scores = np.zeros(router.n_experts)
    d_scores[cache.support] = g_sup * (dg_sup - inner)
    # scores -> final-element projection (codebook rows are buffers: no grad)
    p = res.projections[-1]
    pn = float(np.linalg.norm(p))
    phat = p / pn
    dp = np.zeros_like(p)
    W = router.codebook.weights
    row_norms = np.linalg.norm(W, axis=1)
    for i in np.flatnonzero(d_scores):
        dp += d_scores[i] * (W[i] / row_norms[i] - res.scores[-1, i] * phat) / pn
    # projection MLP backward at the final row only
    sliced = [c[-1:] for c in res.projection_cache]
    d_in = mlp_backward(router.projection, sliced, dp[None, :], grads, f"{router_prefix}.projection")
    dX[-1] += d_in[0]
    return dX


def item_experts_forward(router: ThemeRouter, experts, seq_embeddings: np.ndarray):
    """Theme-dispatched item experts combined by the last item's gate."""
    result = dispatch(router, np.asarray(seq_embeddings, dtype=np.float64))
    cache = _grouped_forward(router, experts, result)
    return cache.output, cache


def item_experts_backward(router, experts, cache, d_out, grads, expert_prefix="item_expert",
                          router_prefix="item_router"):
    return _grouped_backward(router, experts, cache, d_out, grads, expert_prefix, router_prefix)


def window_experts_forward(router: ThemeRouter, experts, window_seq: WindowSequence):
    """Same structure as the item group, over mean-pooled windows."""
    if len(window_seq) < 1:
        raise ArgumentError("window experts require a non-empty window sequence")
    result = dispatch(router, window_seq.embeddings)
    cache = _grouped_forward(router, experts, result)
    cache.window_seq = window_seq
    return cache.output, cache


def window_experts_backward(router, experts, cache, d_out, grads, dX_items,
                            expert_prefix="window_expert", router_prefix="window_router"):
    d_windows = _grouped_backward(router, experts, cache, d_out, grads, expert_prefix, router_prefix)
    window_transform_backward(cache.window_seq, d_windows, dX_items)
    return dX_items


def _merge(grads: dict[str, np.ndarray], new: dict[str, np.ndarray], prefix: str) -> None:
    for key, val in new.items():
        name = f"{prefix}.{key}"
        if name in grads:
            grads[name] += val
        else:
            grads[name] = val
