"""Shared utilities: config loading and structured logging."""

from .config_loader import (
    CONFIG_SCHEMA_VERSION,
    bundled_config_names,
    load_config,
    merge_config,
    resolve_config_path,
)
from .log import JsonLineFormatter, configure_logging

__all__ = [
    # Config
    'CONFIG_SCHEMA_VERSION',
    'bundled_config_names',
    'load_config',
    'merge_config',
    'resolve_config_path',

    # Logging
    'JsonLineFormatter',
    'configure_logging',
]
