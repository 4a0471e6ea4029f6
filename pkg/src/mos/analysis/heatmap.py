"""Heatmap export: CSV plus an uncompressed grayscale raster (binary PGM).

Similarity values are mapped linearly from [-1, 1] to [0, 255]; detected
boundary rows/columns are overdrawn at full intensity.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import MosError
from .similarity import SimilarityMatrix


def export_heatmap(sim: SimilarityMatrix, path_base: str) -> tuple[str, str]:
    """Writes ``<path_base>.csv`` and ``<path_base>.pgm``; returns both paths."""
    csv_path = f"{path_base}.csv"
    pgm_path = f"{path_base}.pgm"
    M = sim.matrix
    try:
        with open(csv_path, "w", encoding="utf-8") as fh:
            for row in M:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
        write_pgm(pgm_path, heatmap_pixels(sim))
    except OSError as exc:
        raise MosError(f"cannot write heatmap: {exc}") from exc
    return csv_path, pgm_path


def heatmap_pixels(sim: SimilarityMatrix) -> np.ndarray:
    scaled = np.rint((np.clip(sim.matrix, -1.0, 1.0) + 1.0) * 127.5)
    pixels = scaled.astype(np.uint8)
    for b in sim.boundaries:
        pixels[b, :] = 255
        pixels[:, b] = 255
    return pixels


def write_pgm(path: str, pixels: np.ndarray) -> None:
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) != 4:
        raise MosError(f"{path}: not a binary PGM written by this package")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3][: w * h], dtype=np.uint8).reshape(h, w)


def read_heatmap_csv(path: str) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return np.asarray(rows, dtype=np.float64)
