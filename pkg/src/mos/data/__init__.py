from .split import split
from .synthetic import SyntheticConfig, Trajectory, generate_synthetic, simulate_theme_trajectory
from .tsv import export_tsv, ingest_tsv, read_embeddings, read_meta, write_embeddings
from .types import (
    INTERACTION_LABEL,
    Impression,
    LabeledDataset,
    UserEvents,
    build_impressions,
    eligible_history,
    impressions_equal,
)

__all__ = [
    "split",
    "SyntheticConfig",
    "Trajectory",
    "generate_synthetic",
    "simulate_theme_trajectory",
    "export_tsv",
    "ingest_tsv",
    "read_embeddings",
    "read_meta",
    "write_embeddings",
    "INTERACTION_LABEL",
    "Impression",
    "LabeledDataset",
    "UserEvents",
    "build_impressions",
    "eligible_history",
    "impressions_equal",
]
