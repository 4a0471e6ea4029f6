from .mos_model import (
    BackboneModel,
    BackboneTrace,
    ForwardTrace,
    FusionWeights,
    ModelConfig,
    MosModel,
    TrainingStage,
    backbone_backward,
    backbone_forward,
    backbone_forward_cached,
    backbone_from_mos,
    backbone_named_parameters,
    build_backbone,
    build_model,
    effective_fusion,
    load_model,
    mos_backward,
    mos_forward,
    named_buffers,
    named_parameters,
    save_model,
)
from .stages import stage_parameter_sets
from .training import (
    EpochRecord,
    StageSchedule,
    TrainConfig,
    epoch_permutation,
    evaluate,
    log_header,
    score_impressions,
    train,
    write_log_csv,
)

__all__ = [
    "BackboneModel",
    "BackboneTrace",
    "ForwardTrace",
    "FusionWeights",
    "ModelConfig",
    "MosModel",
    "TrainingStage",
    "backbone_backward",
    "backbone_forward",
    "backbone_forward_cached",
    "backbone_from_mos",
    "backbone_named_parameters",
    "build_backbone",
    "build_model",
    "effective_fusion",
    "load_model",
    "mos_backward",
    "mos_forward",
    "named_buffers",
    "named_parameters",
    "save_model",
    "stage_parameter_sets",
    "EpochRecord",
    "StageSchedule",
    "TrainConfig",
    "epoch_permutation",
    "evaluate",
    "log_header",
    "score_impressions",
    "train",
    "write_log_csv",
]
