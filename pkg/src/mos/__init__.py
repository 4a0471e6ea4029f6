"""Theme-aware sparse mixture-of-experts for long-sequence CTR prediction."""

from . import backend

__version__ = "0.1.0"
__all__ = ["backend", "__version__"]
