from .cli import cli
from .config import RunConfig, load_run_config

__all__ = ["RunConfig", "cli", "load_run_config"]
