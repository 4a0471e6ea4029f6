"""Event-log TSV format plus sidecar metadata and embedding files.

Rows are ``user_id<TAB>item_id<TAB>timestamp<TAB>label`` where the label is
``1``/``0`` for impression rows (click / no click) and ``-`` for plain
interaction rows that only contribute history. Per user, rows are ordered
by timestamp with file order breaking ties; every labeled row with at least
one preceding history item yields an impression, and history consists of
interaction rows plus clicked (label 1) rows.
"""

from __future__ import annotations

import struct
from collections import OrderedDict

import numpy as np

from ..exceptions import DataFormatError
from .types import (
    INTERACTION_LABEL,
    Impression,
    LabeledDataset,
    UserEvents,
    build_impressions,
)

EMBEDDING_MAGIC = b"MOSEMB01"


def export_tsv(
    dataset: LabeledDataset,
    tsv_path: str,
    meta_path: str | None = None,
    impressions: list[Impression] | None = None,
) -> None:
    """Write the event log; optionally restrict which rows keep their labels.

    When ``impressions`` is given (a subset of the dataset's impressions),
    rows backing other impressions are demoted: clicked ones become plain
    interactions ('-', still history), unclicked ones are dropped. The
    resulting file re-ingests to exactly the requested impression set.
    """
    keep: set[tuple[int, int]] | None = None
    if impressions is not None:
        keep = {(imp.user_id, imp.event_index) for imp in impressions}
    with open(tsv_path, "w", encoding="utf-8") as fh:
        for ev in dataset.events:
            for idx in range(ev.items.shape[0]):
                label = int(ev.labels[idx])
                if keep is not None and label != INTERACTION_LABEL:
                    if (ev.user_id, idx) not in keep:
                        if label == 0:
                            continue
                        label = INTERACTION_LABEL
                text = "-" if label == INTERACTION_LABEL else str(label)
                fh.write(f"{ev.user_id}\t{int(ev.items[idx])}\t{int(ev.timestamps[idx])}\t{text}\n")
    if meta_path is not None:
        with open(meta_path, "w", encoding="utf-8") as fh:
            for key, value in dataset.meta.items():
                fh.write(f"{key}={value}\n")


def read_meta(meta_path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(meta_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError(f"{meta_path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def ingest_tsv(
    interactions_path: str,
    embeddings_path: str | None = None,
    max_seq: int = 200,
) -> LabeledDataset:
    """Parse an event-log TSV into a dataset (no ground truth)."""
    per_user: "OrderedDict[int, list[tuple[int, int, int, int]]]" = OrderedDict()
    with open(interactions_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataFormatError(
                    f"{interactions_path}: line {lineno}: expected 4 tab-separated fields"
                )
            try:
                user = int(parts[0])
                item = int(parts[1])
                ts = int(parts[2])
            except ValueError as exc:
                raise DataFormatError(
                    f"{interactions_path}: line {lineno}: non-integer field ({exc})"
                ) from exc
            if item < 0:
                raise DataFormatError(f"{interactions_path}: line {lineno}: negative item id")
            if parts[3] == "-":
                label = INTERACTION_LABEL
            elif parts[3] in ("0", "1"):
                label = int(parts[3])
            else:
                raise DataFormatError(
                    f"{interactions_path}: line {lineno}: label must be '-', '0' or '1'"
                )
            per_user.setdefault(user, []).append((ts, lineno, item, label))

    item_vectors = None
    if embeddings_path is not None:
        item_vectors = read_embeddings(embeddings_path)

    events: list[UserEvents] = []
    impressions: list[Impression] = []
    max_item = -1
    for user in sorted(per_user):
        rows = sorted(per_user[user], key=lambda r: (r[0], r[1]))  # ties: file order
        items = np.array([r[2] for r in rows], dtype=np.int64)
        ts = np.array([r[0] for r in rows], dtype=np.int64)
        labels = np.array([r[3] for r in rows], dtype=np.int64)
        ev = UserEvents(user, items, ts, labels)
        events.append(ev)
        impressions.extend(build_impressions(ev, max_seq))
        if items.size:
            max_item = max(max_item, int(items.max()))

    n_items = item_vectors.shape[0] if item_vectors is not None else max_item + 1
    return LabeledDataset(
        impressions=impressions,
        events=events,
        n_items=n_items,
        item_vectors=item_vectors,
    )


def write_embeddings(path: str, matrix: np.ndarray) -> None:
    data = np.ascontiguousarray(matrix, dtype="<f8")
    if data.ndim != 2:
        raise DataFormatError("embedding matrix must be 2-d")
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<QQ", data.shape[0], data.shape[1]))
        fh.write(data.tobytes())


def read_embeddings(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(len(EMBEDDING_MAGIC)) != EMBEDDING_MAGIC:
            raise DataFormatError(f"{path}: bad embedding-file magic")
        header = fh.read(16)
        if len(header) != 16:
            raise DataFormatError(f"{path}: truncated embedding file")
        count, dim = struct.unpack("<QQ", header)
        raw = fh.read(8 * count * dim)
        if len(raw) != 8 * count * dim:
            raise DataFormatError(f"{path}: truncated embedding file")
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(count, dim)
