"""Analytic FLOPs accounting.

Conventions (fixed so reports are comparable):
- a multiply or an add counts as 1; comparisons and copies count 0;
- divisions and square roots count 1 (surrogate);
- softmax costs 3 per entry (exp surrogate, sum share, divide);
- sigmoid costs 4;
- a matrix-vector product (m outputs from n inputs) costs m*(2n - 1);
- the expert block is charged for full self-attention over its input
  (every position projects and attends), the architecture's theoretical
  workload, independent of the pool-last shortcut the implementation takes.

Per-expert counts always reflect the actually dispatched subsequence
lengths recorded in a forward trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError
from ..model.mos_model import ForwardTrace, MosModel
from ..numerics.core import top_k_indices


def dot_flops(n: int) -> int:
    return 2 * n - 1


def matvec_flops(m: int, n: int) -> int:
    return m * (2 * n - 1)


def layer_norm_flops(d: int) -> int:
    # mean d, center d, variance 2d, inv-std 3, normalize d, affine 2d
    return 7 * d + 3


def softmax_flops(m: int) -> int:
    return 3 * m


def mean_flops(count: int, d: int) -> int:
    return d * count  # (count-1) adds + 1 divide per coordinate


def mlp_row_flops(dims: list[int]) -> int:
    total = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        total += matvec_flops(fan_out, fan_in) + fan_out
    return total


def attention_block_flops(length: int, d: int, ffn_hidden: int) -> int:
    """Full self-attention block over ``length`` positions (see conventions)."""
    if length < 1:
        raise ArgumentError("length must be >= 1")
    proj = 4 * length * matvec_flops(d, d)
    scores = length * length * dot_flops(d) + length * length  # dots + scale
    soft = softmax_flops(length * length)
    mix = length * matvec_flops(d, length)  # A @ V per position/coordinate
    residuals = 2 * length * d
    norms = 2 * length * layer_norm_flops(d)
    ffn = length * (
        matvec_flops(ffn_hidden, d) + ffn_hidden + matvec_flops(d, ffn_hidden) + d
    )
    return proj + scores + soft + mix + residuals + norms + ffn


def router_call_flops(d: int, codebook_dim: int, n_experts: int, k: int) -> int:
    """Theme-score one element: 2-layer projection, cosines, sparse gate."""
    D = codebook_dim
    projection = mlp_row_flops([d, D, D])
    p_norm = 2 * D
    row_norms = n_experts * 2 * D
    cosines = n_experts * (dot_flops(D) + 2)  # dot, norm product, divide
    return projection + p_norm + row_norms + cosines + softmax_flops(k)


def sigmoid_flops() -> int:
    return 4


@dataclass
class FlopsReport:
    embedding: int = 0
    global_expert: int = 0
    item_experts: int = 0
    window_experts: int = 0
    routers: int = 0
    classifier: int = 0

    @property
    def total(self) -> int:
        return (
            self.embedding
            + self.global_expert
            + self.item_experts
            + self.window_experts
            + self.routers
            + self.classifier
        )

    def as_rows(self) -> list[tuple[str, int]]:
        return [
            ("embedding", self.embedding),
            ("global_expert", self.global_expert),
            ("item_experts", self.item_experts),
            ("window_experts", self.window_experts),
            ("routers", self.routers),
            ("classifier", self.classifier),
            ("total", self.total),
        ]


def count_flops(model: MosModel, trace: ForwardTrace) -> FlopsReport:
    """Analytic count for one scored impression, from its trace."""
    cfg = model.config
    d, h = cfg.dim, cfg.ffn_hidden
    t = int(trace.seq_ids.shape[0])
    report = FlopsReport()
    c_g, a_i, a_w = trace.coef
    if c_g != 0.0:
        report.global_expert = attention_block_flops(t, d, h)
    if a_i != 0.0 and trace.item_cache is not None:
        report.routers += t * router_call_flops(d, cfg.codebook_dim, cfg.n_experts, cfg.top_k)
        for length in trace.item_cache.selected_lengths.values():
            report.item_experts += attention_block_flops(length, d, h)
    if a_w != 0.0 and trace.window_cache is not None:
        win_seq = trace.window_cache.window_seq
        for members in win_seq.members:
            report.window_experts += mean_flops(len(members), d)
        report.routers += len(win_seq) * router_call_flops(
            d, cfg.codebook_dim, cfg.n_experts, cfg.top_k
        )
        for length in trace.window_cache.selected_lengths.values():
            report.window_experts += attention_block_flops(length, d, h)
    # fusion: one scale per term plus adds between terms
    n_terms = sum(1 for coef in trace.coef if coef != 0.0)
    fusion = n_terms * d + (n_terms - 1) * d if n_terms > 1 else 0
    report.classifier = (
        fusion
        + mlp_row_flops([w.shape[0] for w in model.classifier.weights] + [1])
        + sigmoid_flops()
    )
    return report


def moe_complexity_ratio(k1: int, k2: int, n1: int, n2: int, s: int) -> float:
    """Leading-order cost of split item/window experts relative to one
    shared expert pool of the same total size and selection count:
    (k1^2/n1 + k2^2/(s^2 n2)) / ((k1+k2)^2 / (n1+n2))."""
    for name, val in (("k1", k1), ("k2", k2), ("n1", n1), ("n2", n2), ("s", s)):
        if val <= 0:
            raise ArgumentError(f"{name} must be positive")
    if k1 > n1 or k2 > n2:
        raise ArgumentError("selection count cannot exceed expert count")
    ours = k1 * k1 / n1 + k2 * k2 / (s * s * n2)
    shared = (k1 + k2) ** 2 / (n1 + n2)
    return ours / shared


def shared_moe_expert_flops(
    seq_embeddings: np.ndarray,
    router_weights: np.ndarray,
    k: int,
    d: int,
    ffn_hidden: int,
) -> int:
    """Expert-block cost of a conventional token-dispatched MoE.

    Each position is routed to the top-k of ``n`` linear scores; every
    expert then runs one block over its dispatched subsequence. Returns the
    summed expert-block FLOPs (router cost excluded, mirroring the
    expert-only numerator used for the split/shared comparison).
    """
    X = np.asarray(seq_embeddings, dtype=np.float64)
    n = router_weights.shape[0]
    lengths = np.zeros(n, dtype=np.int64)
    scores = X @ router_weights.T
    for row in scores:
        lengths[top_k_indices(row, k)] += 1
    return int(sum(attention_block_flops(int(l), d, ffn_hidden) for l in lengths if l > 0))
