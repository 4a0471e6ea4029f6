from .codebook import Codebook, apply_ema, collapse_metric, ema_update
from .theme import (
    ThemeRouter,
    check_gate_invariants,
    dense_baseline_scores,
    gate,
    gate_support,
    init_codebook_kmeans,
    init_theme_router,
    project_rows,
    scores_from_projection,
    stability_margin,
    theme_scores,
    verify_stability,
)

__all__ = [
    "Codebook",
    "apply_ema",
    "collapse_metric",
    "ema_update",
    "ThemeRouter",
    "check_gate_invariants",
    "dense_baseline_scores",
    "gate",
    "gate_support",
    "init_codebook_kmeans",
    "init_theme_router",
    "project_rows",
    "scores_from_projection",
    "stability_margin",
    "theme_scores",
    "verify_stability",
]
