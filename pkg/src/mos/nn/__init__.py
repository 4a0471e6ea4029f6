from .adam import AdamState, adam_step
from .attention import (
    AttentionBlockParams,
    attention_weights,
    block_backward,
    block_forward,
    init_attention_block,
)
from .checkpoint import load_tensors, save_tensors
from .classifier import classifier_backward, classifier_forward
from .embedding import EmbeddingTable, embed, init_embedding
from .loss import bce_loss, sigmoid
from .mlp import MlpParams, init_mlp, mlp_backward, mlp_forward, mlp_forward_cached

__all__ = [
    "AdamState",
    "adam_step",
    "AttentionBlockParams",
    "attention_weights",
    "block_backward",
    "block_forward",
    "init_attention_block",
    "load_tensors",
    "save_tensors",
    "classifier_backward",
    "classifier_forward",
    "EmbeddingTable",
    "embed",
    "init_embedding",
    "bce_loss",
    "sigmoid",
    "MlpParams",
    "init_mlp",
    "mlp_backward",
    "mlp_forward",
    "mlp_forward_cached",
]
