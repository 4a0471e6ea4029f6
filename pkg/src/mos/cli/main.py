"""Command-line entry point: generate / train / eval / analyze.

Exit codes: 0 ok, 2 configuration error, 3 i/o or file-format error,
4 training aborted (non-finite loss), 5 checkpoint/dataset incompatibility,
6 metric undefined. ``MOS_THREADS`` caps internal parallelism (default 1
for bit-exact runs); every command writes its fully resolved configuration
next to its outputs and locks the output directory while running.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..analysis.flops import count_flops, moe_complexity_ratio
from ..analysis.metrics import auc, gauc
from ..analysis.routing_stats import routing_histogram
from ..analysis.similarity import SimilarityMatrix, detect_sessions, self_similarity
from ..analysis.heatmap import export_heatmap
from ..data.split import split
from ..data.synthetic import generate_synthetic
from ..data.tsv import export_tsv, ingest_tsv, read_meta, write_embeddings
from ..data.types import LabeledDataset, eligible_history
from ..exceptions import (
    CompatibilityError,
    ConfigError,
    DataFormatError,
    MetricUndefinedError,
    MosError,
    TrainingDiverged,
)
from ..model.mos_model import MosModel, TrainingStage, build_model, load_model, mos_forward, save_model
from ..model.training import train, write_log_csv
from .config import RunConfig, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_TRAINING = 4
EXIT_COMPAT = 5
EXIT_METRIC = 6

LOCK_NAME = ".mos-lock"


def _threads() -> int:
    raw = os.environ.get("MOS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"MOS_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError(f"MOS_THREADS must be >= 1, got {n}")
    return n


class _OutputLock:
    """Exclusive lock file guarding an output directory."""

    def __init__(self, out_dir: str):
        self.path = os.path.join(out_dir, LOCK_NAME)
        self.fd: int | None = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OSError(f"output directory is locked by another run: {self.path}")
        return self

    def __exit__(self, *_exc):
        if self.fd is not None:
            os.close(self.fd)
            os.remove(self.path)


def _prepare_out(out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)


def cmd_generate(cfg: RunConfig, out_dir: str) -> int:
    _prepare_out(out_dir)
    with _OutputLock(out_dir):
        dataset = generate_synthetic(cfg.synthetic_config())
        export_tsv(
            dataset,
            os.path.join(out_dir, "dataset.tsv"),
            os.path.join(out_dir, "dataset.meta"),
        )
        write_embeddings(os.path.join(out_dir, "item_vectors.emb"), dataset.item_vectors)
        train_ds, val_ds, test_ds = split(dataset, cfg.split_ratios())
        for name, part in (("train", train_ds), ("val", val_ds), ("test", test_ds)):
            export_tsv(dataset, os.path.join(out_dir, f"{name}.tsv"), impressions=part.impressions)
        cfg.echo(os.path.join(out_dir, "config_resolved.txt"))
        print(f"users: {dataset.n_users}")
        print(f"items: {dataset.n_items}")
        print(f"impressions: {len(dataset.impressions)}")
        print(f"split: {len(train_ds.impressions)}/{len(val_ds.impressions)}/{len(test_ds.impressions)}")
    return EXIT_OK


def _load_dataset(
    data_path: str, part: str = "dataset", fallback_max_seq: int = 200
) -> tuple[LabeledDataset, int]:
    """Returns (dataset, vocab_size). ``data_path`` is a TSV file or a
    directory produced by ``generate`` (then ``part``.tsv is used). The
    history cap comes from the sidecar metadata when present."""
    if os.path.isdir(data_path):
        tsv = os.path.join(data_path, f"{part}.tsv")
        meta_path = os.path.join(data_path, "dataset.meta")
    else:
        tsv = data_path
        meta_path = os.path.splitext(data_path)[0] + ".meta"
    meta = read_meta(meta_path) if os.path.exists(meta_path) else {}
    max_seq = int(meta.get("max_seq", fallback_max_seq))
    dataset = ingest_tsv(tsv, max_seq=max_seq)
    vocab = dataset.n_items
    if "items" in meta:
        vocab = max(vocab, int(meta["items"]))
    dataset.meta.update(meta)
    return dataset, vocab


def cmd_train(cfg: RunConfig, data_path: str, out_dir: str, stage_mode: str) -> int:
    _prepare_out(out_dir)
    with _OutputLock(out_dir):
        backbone_only = stage_mode == "backbone-only"
        max_seq = int(cfg["data.max_seq"])
        if os.path.isdir(data_path):
            train_ds, vocab = _load_dataset(data_path, "train", max_seq)
            val_ds, vocab_val = _load_dataset(data_path, "val", max_seq)
            vocab = max(vocab, vocab_val)
        else:
            full, vocab = _load_dataset(data_path, fallback_max_seq=max_seq)
            train_ds, val_ds, _ = split(full, cfg.split_ratios())
        model = build_model(cfg.model_config(vocab), cfg.seed)
        records = train(
            model,
            train_ds.impressions,
            val_ds.impressions,
            cfg.train_config(backbone_only),
            out_dir=out_dir,
        )
        write_log_csv(records, model.config.n_experts, os.path.join(out_dir, "training_log.csv"))
        eval_stage = TrainingStage.BACKBONE_WARMUP if backbone_only else TrainingStage.JOINT
        save_model(model, os.path.join(out_dir, "checkpoint.bin"), eval_stage=eval_stage)
        cfg.echo(os.path.join(out_dir, "config_resolved.txt"))
        print(f"trained on {len(train_ds.impressions)} impressions; "
              f"checkpoint: {os.path.join(out_dir, 'checkpoint.bin')}")
    return EXIT_OK


def _check_vocab(model: MosModel, dataset: LabeledDataset) -> None:
    max_id = -1
    for ev in dataset.events:
        if ev.items.size:
            max_id = max(max_id, int(ev.items.max()))
    if max_id >= model.config.vocab_size:
        raise CompatibilityError(
            f"dataset contains item id {max_id} but checkpoint vocab is {model.config.vocab_size}"
        )


def cmd_eval(checkpoint: str, data_path: str, out_dir: str) -> int:
    _prepare_out(out_dir)
    with _OutputLock(out_dir):
        model, eval_stage = load_model(checkpoint)
        dataset, _ = _load_dataset(data_path, "test")
        _check_vocab(model, dataset)
        imps = dataset.impressions
        if not imps:
            raise MetricUndefinedError("no impressions to evaluate")

        def _score(imp):
            prob, trace = mos_forward(model, imp.sequence, imp.target, eval_stage)
            report = count_flops(model, trace)
            loads = np.zeros(model.config.n_experts, dtype=np.int64)
            for cache in (trace.item_cache, trace.window_cache):
                if cache is not None:
                    loads += (cache.result.gates > 0.0).sum(axis=0).astype(np.int64)
            return prob, report.total, loads

        threads = _threads()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_score, imps))
        else:
            results = [_score(imp) for imp in imps]
        probs = np.array([r[0] for r in results])
        flops_mean = float(np.mean([r[1] for r in results]))
        loads_total = np.sum([r[2] for r in results], axis=0)
        labels = np.array([imp.label for imp in imps])
        overall = auc(probs, labels)
        groups: dict[int, list[int]] = {}
        for idx, imp in enumerate(imps):
            groups.setdefault(imp.user_id, []).append(idx)
        grouped = gauc(
            (probs[np.array(groups[u])], labels[np.array(groups[u])]) for u in sorted(groups)
        )
        share = loads_total / loads_total.sum() if loads_total.sum() else loads_total * 0.0
        with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
            fh.write("metric,value\n")
            fh.write(f"auc,{overall!r}\n")
            fh.write(f"gauc,{grouped!r}\n")
            for i, s in enumerate(share):
                fh.write(f"load_{i},{float(s)!r}\n")
            fh.write(f"flops_per_impression,{flops_mean!r}\n")
        print(f"auc={overall:.6f} gauc={grouped:.6f} flops/impression={flops_mean:.1f}")
    return EXIT_OK


def cmd_analyze(checkpoint: str, data_path: str, mode: str, out_dir: str) -> int:
    _prepare_out(out_dir)
    with _OutputLock(out_dir):
        model, eval_stage = load_model(checkpoint)
        dataset, _ = _load_dataset(data_path, "dataset")
        _check_vocab(model, dataset)
        if mode == "sessions":
            _analyze_sessions(model, dataset, out_dir)
        elif mode == "routing":
            _analyze_routing(model, dataset, out_dir)
        else:
            _analyze_flops(model, dataset, eval_stage, out_dir)
    return EXIT_OK


def _analyze_sessions(model: MosModel, dataset: LabeledDataset, out_dir: str, max_users: int = 8):
    rows = ["user,boundary"]
    for ev in dataset.events[:max_users]:
        items = eligible_history(ev)
        if items.size < 2:
            continue
        sim = self_similarity(model.embedding.weights[items])
        boundaries = detect_sessions(sim)
        sim = SimilarityMatrix(sim.matrix, boundaries)
        export_heatmap(sim, os.path.join(out_dir, f"user_{ev.user_id}_similarity"))
        rows.extend(f"{ev.user_id},{b}" for b in boundaries)
    with open(os.path.join(out_dir, "session_boundaries.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"analyzed sessions for {min(max_users, len(dataset.events))} users")


def _analyze_routing(model: MosModel, dataset: LabeledDataset, out_dir: str):
    histograms, most, least = routing_histogram(model, dataset, min_occurrences=8)
    n = model.config.n_experts
    header = "item_id,occurrences," + ",".join(f"expert_{i}" for i in range(n))
    with open(os.path.join(out_dir, "routing_histograms.csv"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for hist in histograms:
            counts = ",".join(str(int(c)) for c in hist.dispatch_counts)
            fh.write(f"{hist.item_id},{hist.occurrences},{counts}\n")
    if most is not None:
        print(f"most frequent item: {most.item_id} ({most.occurrences} occurrences)")
        print(f"least frequent item: {least.item_id} ({least.occurrences} occurrences)")
    else:
        print("no item meets the minimum occurrence filter")


def _analyze_flops(model, dataset, eval_stage, out_dir: str, sample: int = 256):
    reports = []
    for imp in dataset.impressions[:sample]:
        _, trace = mos_forward(model, imp.sequence, imp.target, eval_stage)
        reports.append(count_flops(model, trace))
    cfg = model.config
    ratio = moe_complexity_ratio(
        cfg.top_k, cfg.top_k, cfg.n_experts, cfg.n_experts, cfg.window_stride
    )
    with open(os.path.join(out_dir, "flops_report.csv"), "w", encoding="utf-8") as fh:
        fh.write("component,mean_flops\n")
        for key in ("embedding", "global_expert", "item_experts", "window_experts",
                    "routers", "classifier"):
            mean = float(np.mean([getattr(r, key) for r in reports])) if reports else 0.0
            fh.write(f"{key},{mean!r}\n")
        total = float(np.mean([r.total for r in reports])) if reports else 0.0
        fh.write(f"total,{total!r}\n")
        fh.write(f"theoretical_complexity_ratio,{ratio!r}\n")
    print(f"theoretical complexity ratio: {ratio}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mos",
        description="theme-aware mixture-of-experts for long-sequence CTR prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic session-hopping dataset")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--seed", type=int, default=None)

    p_train = sub.add_parser("train", help="train a model on a dataset")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--stage", choices=("backbone-only", "full"), default="full")

    p_eval = sub.add_parser("eval", help="score a dataset with a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", required=True)

    p_an = sub.add_parser("analyze", help="session/routing/flops analyses")
    p_an.add_argument("--checkpoint", required=True)
    p_an.add_argument("--data", required=True)
    p_an.add_argument("--mode", choices=("sessions", "routing", "flops"), required=True)
    p_an.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        _threads()  # validate early
        if args.command == "generate":
            cfg = parse_config(args.config, args.seed)
            return cmd_generate(cfg, args.out)
        if args.command == "train":
            cfg = parse_config(args.config, args.seed)
            return cmd_train(cfg, args.data, args.out, args.stage)
        if args.command == "eval":
            return cmd_eval(args.checkpoint, args.data, args.out)
        return cmd_analyze(args.checkpoint, args.data, args.mode, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except CompatibilityError as exc:
        print(f"incompatible inputs: {exc}", file=sys.stderr)
        return EXIT_COMPAT
    except MetricUndefinedError as exc:
        print(f"metric undefined: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except (DataFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
