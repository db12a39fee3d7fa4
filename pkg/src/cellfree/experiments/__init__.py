"""Configuration, seeded sweeps and the command-line entry point."""

from .config import ConfigError, ExperimentConfig, resolve_config
from .figures import FIGURES, run_figure

__all__ = ["ConfigError", "ExperimentConfig", "FIGURES", "resolve_config", "run_figure"]
