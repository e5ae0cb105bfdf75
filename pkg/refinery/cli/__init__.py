"""
Command-line interface: one argparse sub-command per operation.
"""
import argparse
import logging
from typing import Optional, Sequence

from pydantic import ValidationError

from refinery.cli import evaluate, pipeline, probe, split, synth
from refinery.core.config import settings
from refinery.core.errors import ConfigError, RefineryError
from refinery.core.logging import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3

COMMAND_GROUPS = (synth, probe, split, evaluate, pipeline)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refinery",
        description="Refine classes into finer sub-classes and measure representation universality.",
    )
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default: {settings.LOG_LEVEL})")
    parser.add_argument("--threads", type=int, default=None, help="Worker pool size (REFINERY_THREADS)")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for group in COMMAND_GROUPS:
        group.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns 0, 2 for configuration errors, 3 for failures."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.threads is not None:
        if args.threads < 1:
            logger.error("--threads must be >= 1")
            return EXIT_CONFIG
        settings.THREADS = args.threads
    try:
        return args.handler(args)
    except (ConfigError, ValidationError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except RefineryError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILURE
    except OSError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILURE
