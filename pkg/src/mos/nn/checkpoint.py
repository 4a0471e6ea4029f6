"""Versioned binary tensor container.

Layout: magic, u32 version, u32 tensor count, then per tensor:
u32 name length, name bytes (utf-8), u32 ndim, u64 dims, float64
little-endian data. Round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from collections import OrderedDict

import numpy as np

from ..exceptions import CheckpointError

MAGIC = b"MOSMODEL"
VERSION = 1


def save_tensors(path: str, tensors: "OrderedDict[str, np.ndarray]") -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(tensors)))
        for name, arr in tensors.items():
            data = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}Q", *data.shape))
            fh.write(data.tobytes())


def load_tensors(path: str) -> "OrderedDict[str, np.ndarray]":
    out: OrderedDict[str, np.ndarray] = OrderedDict()
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path}: bad magic, not a model checkpoint")
        version, count = struct.unpack("<II", _read(fh, 8, path))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported format version {version}")
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read(fh, 4, path))
            name = _read(fh, name_len, path).decode("utf-8")
            (ndim,) = struct.unpack("<I", _read(fh, 4, path))
            shape = struct.unpack(f"<{ndim}Q", _read(fh, 8 * ndim, path)) if ndim else ()
            n_items = int(np.prod(shape)) if ndim else 1
            raw = _read(fh, 8 * n_items, path)
            out[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    return out


def _read(fh, n: int, path: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CheckpointError(f"{path}: truncated checkpoint")
    return buf
