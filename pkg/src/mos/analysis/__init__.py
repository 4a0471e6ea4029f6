from .flops import (
    FlopsReport,
    attention_block_flops,
    count_flops,
    layer_norm_flops,
    matvec_flops,
    mean_flops,
    mlp_row_flops,
    moe_complexity_ratio,
    router_call_flops,
    shared_moe_expert_flops,
)
from .heatmap import export_heatmap, heatmap_pixels, read_heatmap_csv, read_pgm, write_pgm
from .metrics import auc, gauc
from .routing_stats import (
    RoutingHistogram,
    modal_share,
    routing_histogram,
    theme_routing_purity,
)
from .similarity import (
    SimilarityMatrix,
    boundary_recall_precision,
    detect_sessions,
    self_similarity,
)

__all__ = [
    "FlopsReport",
    "attention_block_flops",
    "count_flops",
    "layer_norm_flops",
    "matvec_flops",
    "mean_flops",
    "mlp_row_flops",
    "moe_complexity_ratio",
    "router_call_flops",
    "shared_moe_expert_flops",
    "export_heatmap",
    "heatmap_pixels",
    "read_heatmap_csv",
    "read_pgm",
    "write_pgm",
    "auc",
    "gauc",
    "RoutingHistogram",
    "modal_share",
    "routing_histogram",
    "theme_routing_purity",
    "SimilarityMatrix",
    "boundary_recall_precision",
    "detect_sessions",
    "self_similarity",
]
