"""Structured JSON-lines logging.

Each record is written to stderr as one JSON object:

    {"timestamp": "2026-01-01 12:00:00", "level": "DEBUG",
     "step": "fit_iteration", "data": {"iteration": 3, "objective": 1.25}}

``step`` is the logger message, ``data`` comes from ``extra={"data": ...}``.
"""

import json
import logging
import sys
import time
from typing import Optional, TextIO

LOGGER_NAME = "geodesic_dcd"


class JsonLineFormatter(logging.Formatter):
    """Render log records as single-line JSON objects."""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "timestamp": time.strftime("%Y-%m-%d %H:%M:%S", time.localtime(record.created)),
            "level": record.levelname,
            "step": record.getMessage(),
            "data": getattr(record, "data", {}),
        }
        if record.exc_info:
            payload["data"] = dict(payload["data"], exception=self.formatException(record.exc_info))
        return json.dumps(payload, default=str)


def configure_logging(verbosity: int = 0, stream: Optional[TextIO] = None) -> logging.Logger:
    """Install the JSON-lines handler on the package logger.

    Args:
        verbosity: 0 = WARNING, 1 = INFO, 2+ = DEBUG
        stream: Output stream, stderr by default

    Returns:
        The configured package logger
    """
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)

    for handler in list(logger.handlers):
        if getattr(handler, "_geodesic_dcd", False):
            logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    handler._geodesic_dcd = True
    logger.addHandler(handler)
    logger.propagate = False
    return logger
