"""End-to-end model: embedding, three expert scales, fusion, classifier.

The user representation is the convex combination
``y = (1 - a_I - a_W) * y_G + a_I * y_I + a_W * y_W`` with stage-dependent
effective weights; groups with a zero coefficient are skipped entirely (no
compute, no FLOPs). The click probability is a sigmoid over a classifier
applied to ``[y ; target embedding]``.
"""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError, CheckpointError
from ..nn.attention import AttentionBlockParams, init_attention_block
from ..nn.checkpoint import load_tensors, save_tensors
from ..nn.classifier import classifier_backward, classifier_forward
from ..nn.embedding import EmbeddingTable, embed, init_embedding
from ..nn.loss import sigmoid
from ..nn.mlp import MlpParams, init_mlp
from ..numerics.rng import RngStream
from ..router.theme import ThemeRouter, init_theme_router
from ..experts.scales import (
    GroupCache,
    global_expert_backward,
    global_expert_forward,
    item_experts_backward,
    item_experts_forward,
    window_experts_backward,
    window_experts_forward,
)
from ..experts.windows import WindowSpec, window_transform


class TrainingStage(enum.Enum):
    BACKBONE_WARMUP = 0
    EXPERT_WARMUP = 1
    JOINT = 2


STAGE_LABELS = {
    TrainingStage.BACKBONE_WARMUP: "backbone",
    TrainingStage.EXPERT_WARMUP: "expert",
    TrainingStage.JOINT: "joint",
}


@dataclass
class FusionWeights:
    alpha_item: float = 0.25
    alpha_window: float = 0.25

    def __post_init__(self):
        if not (0.0 <= self.alpha_item <= 1.0 and 0.0 <= self.alpha_window <= 1.0):
            raise ArgumentError("fusion weights must lie in [0, 1]")
        if self.alpha_item + self.alpha_window > 1.0 + 1e-12:
            raise ArgumentError("fusion weights must satisfy alpha_item + alpha_window <= 1")


@dataclass
class ModelConfig:
    vocab_size: int
    dim: int = 16
    codebook_dim: int = 32
    n_experts: int = 5
    top_k: int = 1
    window_size: int = 8
    window_stride: int = 4
    ffn_hidden: int = 32
    classifier_hidden: int = 16
    alpha_item: float = 0.25
    alpha_window: float = 0.25
    ema_decay: float = 0.999


@dataclass
class MosModel:
    config: ModelConfig
    embedding: EmbeddingTable
    global_expert: AttentionBlockParams
    item_router: ThemeRouter
    item_experts: list[AttentionBlockParams]
    window_router: ThemeRouter
    window_experts: list[AttentionBlockParams]
    window_spec: WindowSpec
    classifier: MlpParams
    fusion: FusionWeights


# fixed per-component stream offsets so a backbone-only build shares
# bit-identical initial parameters with the full model
_STREAM_EMBEDDING = 0
_STREAM_GLOBAL = 1
_STREAM_CLASSIFIER = 2
_STREAM_ITEM_ROUTER = 3
_STREAM_WINDOW_ROUTER = 4
_STREAM_EXPERTS = 16


def build_model(config: ModelConfig, seed: int) -> MosModel:
    root = RngStream(seed)
    n = config.n_experts
    return MosModel(
        config=config,
        embedding=init_embedding(config.vocab_size, config.dim, root.substream(_STREAM_EMBEDDING)),
        global_expert=init_attention_block(
            config.dim, config.ffn_hidden, root.substream(_STREAM_GLOBAL)
        ),
        item_router=init_theme_router(
            config.dim, config.codebook_dim, n, config.top_k, config.ema_decay,
            root.substream(_STREAM_ITEM_ROUTER),
        ),
        item_experts=[
            init_attention_block(config.dim, config.ffn_hidden, root.substream(_STREAM_EXPERTS + i))
            for i in range(n)
        ],
        window_router=init_theme_router(
            config.dim, config.codebook_dim, n, config.top_k, config.ema_decay,
            root.substream(_STREAM_WINDOW_ROUTER),
        ),
        window_experts=[
            init_attention_block(
                config.dim, config.ffn_hidden, root.substream(_STREAM_EXPERTS + n + i)
            )
            for i in range(n)
        ],
        window_spec=WindowSpec(config.window_size, config.window_stride),
        classifier=init_mlp(
            [2 * config.dim, config.classifier_hidden, 1],
            ["relu", "identity"],
            root.substream(_STREAM_CLASSIFIER),
        ),
        fusion=FusionWeights(config.alpha_item, config.alpha_window),
    )


def named_parameters(model: MosModel) -> "OrderedDict[str, np.ndarray]":
    """Gradient-trainable tensors; codebooks are buffers and never appear."""
    out: OrderedDict[str, np.ndarray] = OrderedDict()
    out.update(model.embedding.named_arrays("embedding"))
    out.update(model.global_expert.named_arrays("global_expert"))
    out.update(model.item_router.projection.named_arrays("item_router.projection"))
    for i, ex in enumerate(model.item_experts):
        out.update(ex.named_arrays(f"item_expert.{i}"))
    out.update(model.window_router.projection.named_arrays("window_router.projection"))
    for i, ex in enumerate(model.window_experts):
        out.update(ex.named_arrays(f"window_expert.{i}"))
    out.update(model.classifier.named_arrays("classifier"))
    return out


def named_buffers(model: MosModel) -> "OrderedDict[str, np.ndarray]":
    return OrderedDict(
        [
            ("item_router.codebook.weights", model.item_router.codebook.weights),
            ("item_router.codebook.usage", model.item_router.codebook.usage),
            ("window_router.codebook.weights", model.window_router.codebook.weights),
            ("window_router.codebook.usage", model.window_router.codebook.usage),
        ]
    )


def effective_fusion(
    fusion: FusionWeights, stage: TrainingStage
) -> tuple[float, float, float]:
    """Stage-effective (global, item, window) coefficients."""
    if stage is TrainingStage.BACKBONE_WARMUP:
        return 1.0, 0.0, 0.0
    if stage is TrainingStage.EXPERT_WARMUP:
        return 0.0, 0.5, 0.5
    a_i, a_w = fusion.alpha_item, fusion.alpha_window
    return 1.0 - a_i - a_w, a_i, a_w


@dataclass
class ForwardTrace:
    seq_ids: np.ndarray
    target_id: int
    stage: TrainingStage
    coef: tuple[float, float, float]
    X: np.ndarray
    target_emb: np.ndarray
    global_cache: tuple | None
    y_global: np.ndarray | None
    item_cache: GroupCache | None
    window_cache: GroupCache | None
    fused: np.ndarray
    classifier_cache: list
    logit: float
    prob: float

    @property
    def expert_invocations(self) -> dict[str, int]:
        return {
            "global": 1 if self.global_cache is not None else 0,
            "item": len(self.item_cache.support) if self.item_cache else 0,
            "window": len(self.window_cache.support) if self.window_cache else 0,
        }


def _combine(terms: list[tuple[float, np.ndarray]]) -> np.ndarray:
    # preserve bit-identity with the single-path model when one coefficient is 1
    if len(terms) == 1 and terms[0][0] == 1.0:
        return terms[0][1]
    out = terms[0][0] * terms[0][1]
    for coef, vec in terms[1:]:
        out = out + coef * vec
    return out


def mos_forward(
    model: MosModel,
    sequence,
    target: int,
    stage: TrainingStage = TrainingStage.JOINT,
) -> tuple[float, ForwardTrace]:
    """Score one impression; returns (click probability, trace).

    Groups whose stage-effective coefficient is zero are skipped entirely.
    """
    seq_ids = np.asarray(sequence, dtype=np.int64)
    if seq_ids.size < 1:
        raise ArgumentError("mos_forward requires a non-empty item sequence")
    X = embed(model.embedding, seq_ids)
    target_emb = embed(model.embedding, [int(target)])[0]
    c_g, a_i, a_w = effective_fusion(model.fusion, stage)

    terms: list[tuple[float, np.ndarray]] = []
    global_cache = y_global = None
    if c_g != 0.0:
        y_global, global_cache = global_expert_forward(model.global_expert, X)
        terms.append((c_g, y_global))
    item_cache = None
    if a_i != 0.0:
        y_item, item_cache = item_experts_forward(model.item_router, model.item_experts, X)
        terms.append((a_i, y_item))
    window_cache = None
    if a_w != 0.0:
        win_seq = window_transform(X, model.window_spec)
        y_window, window_cache = window_experts_forward(
            model.window_router, model.window_experts, win_seq
        )
        terms.append((a_w, y_window))

    fused = _combine(terms)
    logit, classifier_cache = classifier_forward(model.classifier, fused, target_emb)
    prob = sigmoid(logit)
    trace = ForwardTrace(
        seq_ids=seq_ids,
        target_id=int(target),
        stage=stage,
        coef=(c_g, a_i, a_w),
        X=X,
        target_emb=target_emb,
        global_cache=global_cache,
        y_global=y_global,
        item_cache=item_cache,
        window_cache=window_cache,
        fused=fused,
        classifier_cache=classifier_cache,
        logit=logit,
        prob=prob,
    )
    return prob, trace


def mos_backward(
    model: MosModel,
    trace: ForwardTrace,
    d_logit: float,
    grads: dict[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given d(loss)/d(logit). Accumulates into
    ``grads`` when provided (embedding gradient is dense under
    "embedding.weights")."""
    if grads is None:
        grads = {}
    d_fused, d_target = classifier_backward(
        model.classifier, trace.classifier_cache, d_logit, grads, "classifier"
    )
    c_g, a_i, a_w = trace.coef
    dX = np.zeros_like(trace.X)
    if c_g != 0.0:
        dX += global_expert_backward(
            model.global_expert, trace.global_cache, c_g * d_fused, grads, "global_expert"
        )
    if a_i != 0.0:
        dX += item_experts_backward(
            model.item_router, model.item_experts, trace.item_cache, a_i * d_fused, grads
        )
    if a_w != 0.0:
        window_experts_backward(
            model.window_router, model.window_experts, trace.window_cache,
            a_w * d_fused, grads, dX,
        )
    demb = grads.get("embedding.weights")
    if demb is None:
        demb = np.zeros_like(model.embedding.weights)
        grads["embedding.weights"] = demb
    np.add.at(demb, trace.seq_ids, dX)
    demb[trace.target_id] += d_target
    return grads


# --- plain backbone twin (embedding + global expert + classifier) ---------


@dataclass
class BackboneModel:
    embedding: EmbeddingTable
    global_expert: AttentionBlockParams
    classifier: MlpParams


def build_backbone(config: ModelConfig, seed: int) -> BackboneModel:
    """Backbone with the same initial tensors as ``build_model(config, seed)``."""
    root = RngStream(seed)
    return BackboneModel(
        embedding=init_embedding(config.vocab_size, config.dim, root.substream(_STREAM_EMBEDDING)),
        global_expert=init_attention_block(
            config.dim, config.ffn_hidden, root.substream(_STREAM_GLOBAL)
        ),
        classifier=init_mlp(
            [2 * config.dim, config.classifier_hidden, 1],
            ["relu", "identity"],
            root.substream(_STREAM_CLASSIFIER),
        ),
    )


def backbone_from_mos(model: MosModel) -> BackboneModel:
    """View over the same parameter arrays (no copies)."""
    return BackboneModel(model.embedding, model.global_expert, model.classifier)


def backbone_named_parameters(backbone: BackboneModel) -> "OrderedDict[str, np.ndarray]":
    out: OrderedDict[str, np.ndarray] = OrderedDict()
    out.update(backbone.embedding.named_arrays("embedding"))
    out.update(backbone.global_expert.named_arrays("global_expert"))
    out.update(backbone.classifier.named_arrays("classifier"))
    return out


@dataclass
class BackboneTrace:
    seq_ids: np.ndarray
    target_id: int
    X: np.ndarray
    global_cache: tuple
    classifier_cache: list
    logit: float
    prob: float


def backbone_forward_cached(backbone: BackboneModel, sequence, target: int):
    seq_ids = np.asarray(sequence, dtype=np.int64)
    X = embed(backbone.embedding, seq_ids)
    target_emb = embed(backbone.embedding, [int(target)])[0]
    y, gcache = global_expert_forward(backbone.global_expert, X)
    logit, ccache = classifier_forward(backbone.classifier, y, target_emb)
    prob = sigmoid(logit)
    return prob, BackboneTrace(seq_ids, int(target), X, gcache, ccache, logit, prob)


def backbone_forward(backbone: BackboneModel, sequence, target: int) -> float:
    return backbone_forward_cached(backbone, sequence, target)[0]


def backbone_backward(
    backbone: BackboneModel,
    trace: BackboneTrace,
    d_logit: float,
    grads: dict[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    if grads is None:
        grads = {}
    d_y, d_target = classifier_backward(
        backbone.classifier, trace.classifier_cache, d_logit, grads, "classifier"
    )
    dX = global_expert_backward(
        backbone.global_expert, trace.global_cache, d_y, grads, "global_expert"
    )
    demb = grads.get("embedding.weights")
    if demb is None:
        demb = np.zeros_like(backbone.embedding.weights)
        grads["embedding.weights"] = demb
    np.add.at(demb, trace.seq_ids, dX)
    demb[trace.target_id] += d_target
    return grads


# --- checkpoint ------------------------------------------------------------

_CONFIG_FIELDS = (
    "vocab_size", "dim", "codebook_dim", "n_experts", "top_k", "window_size",
    "window_stride", "ffn_hidden", "classifier_hidden", "alpha_item",
    "alpha_window", "ema_decay",
)
_INT_FIELDS = {
    "vocab_size", "dim", "codebook_dim", "n_experts", "top_k", "window_size",
    "window_stride", "ffn_hidden", "classifier_hidden",
}


def save_model(model: MosModel, path: str, eval_stage: TrainingStage = TrainingStage.JOINT):
    tensors: OrderedDict[str, np.ndarray] = OrderedDict()
    for field in _CONFIG_FIELDS:
        tensors[f"config.{field}"] = np.array(float(getattr(model.config, field)))
    tensors["config.eval_stage"] = np.array(float(eval_stage.value))
    for name, arr in named_parameters(model).items():
        tensors[name] = arr
    for name, arr in named_buffers(model).items():
        tensors[name] = np.asarray(arr, dtype=np.float64)
    save_tensors(path, tensors)


def load_model(path: str) -> tuple[MosModel, TrainingStage]:
    tensors = load_tensors(path)
    try:
        kwargs = {}
        for field in _CONFIG_FIELDS:
            raw = float(tensors.pop(f"config.{field}"))
            kwargs[field] = int(raw) if field in _INT_FIELDS else raw
        eval_stage = TrainingStage(int(float(tensors.pop("config.eval_stage"))))
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing config tensor {exc}") from exc
    config = ModelConfig(**kwargs)
    model = build_model(config, seed=0)
    params = named_parameters(model)
    for name, arr in params.items():
        if name not in tensors:
            raise CheckpointError(f"{path}: missing parameter {name}")
        if tensors[name].shape != arr.shape:
            raise CheckpointError(f"{path}: shape mismatch for {name}")
        arr[...] = tensors[name]
    model.item_router.codebook.weights[...] = tensors["item_router.codebook.weights"]
    model.item_router.codebook.usage[...] = tensors["item_router.codebook.usage"].astype(np.int64)
    model.window_router.codebook.weights[...] = tensors["window_router.codebook.weights"]
    model.window_router.codebook.usage[...] = tensors["window_router.codebook.usage"].astype(
        np.int64
    )
    return model, eval_stage
