"""Three-stage training: backbone warm-up, expert warm-up, joint.

Stages run in fixed order with per-stage epoch budgets and a fresh Adam
state each (a stage trains a different parameter set). Codebooks are
initialized by k-means on projections of the then-current embeddings at the
transition into the first EMA-active stage, and from then on track routed
batch centroids via EMA once per batch.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..analysis.metrics import auc, gauc
from ..data.types import Impression
from ..exceptions import ArgumentError, MetricUndefinedError, TrainingDiverged
from ..nn.adam import AdamState, adam_step
from ..nn.loss import bce_loss
from ..numerics.rng import RngStream
from ..router.codebook import apply_ema, collapse_metric
from ..router.theme import init_codebook_kmeans
from ..experts.windows import window_transform
from .mos_model import (
    MosModel,
    TrainingStage,
    STAGE_LABELS,
    mos_backward,
    mos_forward,
    named_parameters,
    save_model,
)
from .stages import stage_parameter_sets

logger = logging.getLogger(__name__)

COLLAPSE_WARN_THRESHOLD = 0.95

# rng stream offsets inside the training root stream
_OFF_SHUFFLE = 0  # + stage_index * 4096 + epoch
_OFF_KMEANS_ITEM = 500_000
_OFF_KMEANS_WINDOW = 500_001


@dataclass
class StageSchedule:
    backbone: int
    expert: int
    joint: int

    def __post_init__(self):
        if min(self.backbone, self.expert, self.joint) < 0:
            raise ArgumentError("stage budgets must be >= 0")

    @classmethod
    def from_total(cls, total: int) -> "StageSchedule":
        """Default 40% / 20% / 40% split of a total epoch budget."""
        backbone = int(round(0.4 * total))
        expert = int(round(0.2 * total))
        return cls(backbone, expert, total - backbone - expert)

    def stages(self) -> list[tuple[TrainingStage, int]]:
        return [
            (TrainingStage.BACKBONE_WARMUP, self.backbone),
            (TrainingStage.EXPERT_WARMUP, self.expert),
            (TrainingStage.JOINT, self.joint),
        ]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    schedule: StageSchedule = field(default_factory=lambda: StageSchedule.from_total(15))
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ArgumentError("learning rate must be > 0 and batch size >= 1")


@dataclass
class EpochRecord:
    stage: str
    epoch: int
    train_loss: float
    val_auc: float
    val_gauc: float
    collapse_item: float
    collapse_window: float
    loads: np.ndarray

    def csv_row(self) -> str:
        cells = [self.stage, str(self.epoch), repr(self.train_loss), repr(self.val_auc),
                 repr(self.val_gauc), repr(self.collapse_item), repr(self.collapse_window)]
        cells.extend(repr(float(x)) for x in self.loads)
        return ",".join(cells)


def log_header(n_experts: int) -> str:
    loads = ",".join(f"load_{i}" for i in range(n_experts))
    return f"stage,epoch,train_loss,val_auc,val_gauc,collapse_item,collapse_window,{loads}"


def epoch_permutation(seed: int, stage_index: int, epoch: int, n: int) -> np.ndarray:
    stream = RngStream(seed, 1).substream(_OFF_SHUFFLE + stage_index * 4096 + epoch)
    return stream.generator().permutation(n)


def score_impressions(
    model: MosModel, impressions: list[Impression], stage: TrainingStage
) -> np.ndarray:
    return np.array(
        [mos_forward(model, imp.sequence, imp.target, stage)[0] for imp in impressions]
    )


def evaluate(
    model: MosModel, impressions: list[Impression], stage: TrainingStage
) -> tuple[float, float]:
    """(AUC, GAUC) over the impressions; nan when a metric is undefined."""
    if not impressions:
        return float("nan"), float("nan")
    probs = score_impressions(model, impressions, stage)
    labels = np.array([imp.label for imp in impressions])
    groups: dict[int, list[int]] = {}
    for idx, imp in enumerate(impressions):
        groups.setdefault(imp.user_id, []).append(idx)
    try:
        overall = auc(probs, labels)
    except MetricUndefinedError:
        overall = float("nan")
    try:
        grouped = gauc(
            (probs[idxs], labels[idxs]) for idxs in (np.array(groups[u]) for u in sorted(groups))
        )
    except MetricUndefinedError:
        grouped = float("nan")
    return overall, grouped


def _collect_ema(trace, item_acc, window_acc) -> None:
    for cache, (sums, counts) in ((trace.item_cache, item_acc), (trace.window_cache, window_acc)):
        if cache is None:
            continue
        mask = cache.result.gates > 0.0  # (t, n)
        sums += mask.T @ cache.result.projections
        counts += mask.sum(axis=0).astype(np.int64)


def _init_codebooks(model: MosModel, train_set: list[Impression], seed: int) -> None:
    init_codebook_kmeans(
        model.embedding.weights, model.item_router,
        RngStream(seed, 1).substream(_OFF_KMEANS_ITEM),
    )
    window_rows = []
    total = 0
    for imp in train_set:
        X = model.embedding.weights[imp.sequence]
        win = window_transform(X, model.window_spec)
        window_rows.append(win.embeddings)
        total += len(win)
        if total >= 4096:
            break
    init_codebook_kmeans(
        np.concatenate(window_rows, axis=0), model.window_router,
        RngStream(seed, 1).substream(_OFF_KMEANS_WINDOW),
    )


def train(
    model: MosModel,
    train_set: list[Impression],
    val_set: list[Impression],
    cfg: TrainConfig,
    out_dir: str | None = None,
) -> list[EpochRecord]:
    """Run the staged schedule; returns one record per epoch.

    When ``out_dir`` is given, writes a checkpoint at each stage boundary
    and per-batch router diagnostics CSV rows.
    """
    if not train_set:
        raise ArgumentError("training set must be non-empty")
    records: list[EpochRecord] = []
    n = model.config.n_experts
    all_params = named_parameters(model)
    diag_fh = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        diag_fh = open(os.path.join(out_dir, "router_diagnostics.csv"), "w", encoding="utf-8")
        counts_header = ",".join(f"routed_{i}" for i in range(n))
        diag_fh.write(f"router,batch,{counts_header},collapse_metric\n")
    codebooks_ready = False
    global_batch = 0
    try:
        for stage_index, (stage, budget) in enumerate(cfg.schedule.stages()):
            if budget == 0:
                continue
            trainable, _frozen, ema_active = stage_parameter_sets(model, stage)
            if ema_active and not codebooks_ready:
                _init_codebooks(model, train_set, cfg.seed)
                codebooks_ready = True
            params_view = {k: v for k, v in all_params.items() if k in trainable}
            adam = AdamState(learning_rate=cfg.learning_rate)
            for epoch in range(budget):
                order = epoch_permutation(cfg.seed, stage_index, epoch, len(train_set))
                epoch_loss = 0.0
                epoch_loads = np.zeros(n, dtype=np.int64)
                for start in range(0, len(order), cfg.batch_size):
                    batch = order[start : start + cfg.batch_size]
                    inv = 1.0 / len(batch)
                    grads: dict[str, np.ndarray] = {}
                    item_acc = (np.zeros((n, model.config.codebook_dim)), np.zeros(n, np.int64))
                    win_acc = (np.zeros((n, model.config.codebook_dim)), np.zeros(n, np.int64))
                    batch_loss = 0.0
                    for idx in batch:
                        imp = train_set[idx]
                        _prob, trace = mos_forward(model, imp.sequence, imp.target, stage)
                        loss, d_logit = bce_loss(trace.logit, imp.label)
                        batch_loss += loss
                        mos_backward(model, trace, d_logit * inv, grads)
                        _collect_ema(trace, item_acc, win_acc)
                    batch_loss *= inv
                    epoch_loss += batch_loss * len(batch)
                    _check_finite(batch_loss, grads, global_batch)
                    adam_step(adam, params_view, grads)
                    if ema_active:
                        apply_ema(model.item_router.codebook, *item_acc)
                        apply_ema(model.window_router.codebook, *win_acc)
                    epoch_loads += item_acc[1] + win_acc[1]
                    if diag_fh is not None:
                        for label, acc, codebook in (
                            ("item", item_acc, model.item_router.codebook),
                            ("window", win_acc, model.window_router.codebook),
                        ):
                            counts = ",".join(str(int(c)) for c in acc[1])
                            coll = collapse_metric(codebook) if n >= 2 else float("nan")
                            diag_fh.write(f"{label},{global_batch},{counts},{repr(coll)}\n")
                    global_batch += 1
                val_auc, val_gauc = evaluate(model, val_set, stage)
                coll_item = collapse_metric(model.item_router.codebook) if n >= 2 else float("nan")
                coll_win = collapse_metric(model.window_router.codebook) if n >= 2 else float("nan")
                for name, coll in (("item", coll_item), ("window", coll_win)):
                    if coll == coll and coll > COLLAPSE_WARN_THRESHOLD:
                        logger.warning(
                            "%s codebook collapse metric %.4f exceeds %.2f",
                            name, coll, COLLAPSE_WARN_THRESHOLD,
                        )
                total_loads = epoch_loads.sum()
                records.append(
                    EpochRecord(
                        stage=STAGE_LABELS[stage],
                        epoch=epoch,
                        train_loss=epoch_loss / len(train_set),
                        val_auc=val_auc,
                        val_gauc=val_gauc,
                        collapse_item=coll_item,
                        collapse_window=coll_win,
                        loads=epoch_loads / total_loads if total_loads else epoch_loads * 0.0,
                    )
                )
            if out_dir is not None:
                save_model(
                    model,
                    os.path.join(out_dir, f"checkpoint_{STAGE_LABELS[stage]}.bin"),
                    eval_stage=stage,
                )
    finally:
        if diag_fh is not None:
            diag_fh.close()
    return records


def _check_finite(loss: float, grads: dict[str, np.ndarray], batch_index: int) -> None:
    bad_loss = not math.isfinite(loss)
    for name in grads:
        if not np.isfinite(grads[name]).all():
            raise TrainingDiverged(batch_index, name)
    if bad_loss:
        raise TrainingDiverged(batch_index, "loss")


def write_log_csv(records: list[EpochRecord], n_experts: int, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(log_header(n_experts) + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
