"""
Logging setup shared by the CLI and scripts.
"""
import logging
from typing import Optional

from refinery.core.config import settings

_ROOT = "refinery"


def configure_logging(level: Optional[str] = None) -> logging.Logger:
    """Install one stream handler on the package logger (idempotent)."""
    logger = logging.getLogger(_ROOT)
    logger.setLevel((level or settings.LOG_LEVEL).upper())
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
