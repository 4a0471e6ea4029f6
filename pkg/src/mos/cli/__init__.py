from .config import RunConfig, parse_config
from .main import main

__all__ = ["RunConfig", "parse_config", "main"]
