"""Stage-dependent parameter partitioning for the three-phase schedule.

Backbone warm-up trains only the backbone path (embedding, global expert,
classifier) with EMA off; expert warm-up trains the item/window experts and
both router projections with everything else frozen and EMA on; joint
optimization trains all gradient parameters with EMA on. Codebooks are
buffers and never trainable.
"""

from __future__ import annotations

from .mos_model import MosModel, TrainingStage, named_parameters

_BACKBONE_PREFIXES = ("embedding.", "global_expert.", "classifier.")
_EXPERT_PREFIXES = (
    "item_expert.",
    "window_expert.",
    "item_router.projection.",
    "window_router.projection.",
)


def stage_parameter_sets(
    model: MosModel, stage: TrainingStage
) -> tuple[set[str], set[str], bool]:
    """Returns (trainable names, frozen names, ema_active)."""
    names = list(named_parameters(model).keys())
    if stage is TrainingStage.BACKBONE_WARMUP:
        trainable = {n for n in names if n.startswith(_BACKBONE_PREFIXES)}
        ema_active = False
    elif stage is TrainingStage.EXPERT_WARMUP:
        trainable = {n for n in names if n.startswith(_EXPERT_PREFIXES)}
        ema_active = True
    else:
        trainable = set(names)
        ema_active = True
    return trainable, set(names) - trainable, ema_active
