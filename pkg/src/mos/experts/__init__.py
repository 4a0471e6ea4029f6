from .dispatch import DispatchResult, Subsequence, dispatch, extract_subsequences
from .scales import (
    GroupCache,
    global_expert_backward,
    global_expert_forward,
    item_experts_backward,
    item_experts_forward,
    window_experts_backward,
    window_experts_forward,
)
from .windows import WindowSequence, WindowSpec, window_positions, window_transform

__all__ = [
    "DispatchResult",
    "Subsequence",
    "dispatch",
    "extract_subsequences",
    "GroupCache",
    "global_expert_backward",
    "global_expert_forward",
    "item_experts_backward",
    "item_experts_forward",
    "window_experts_backward",
    "window_experts_forward",
    "WindowSequence",
    "WindowSpec",
    "window_positions",
    "window_transform",
]
