"""
`eval`: universality report of one frozen representation over a task suite.
"""
import argparse
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from refinery.core.errors import ConfigError
from refinery.models.linear import LossKind
from refinery.repositories.model_repository import load_probe
from refinery.repositories.report_repository import save_report
from refinery.repositories.task_repository import TaskRepository
from refinery.schemas.training import LinearProbeConfig
from refinery.services.eval_service import evaluate_representation
from refinery.services.fusion_service import Extractor, FusedExtractor, IdentityExtractor, ProbeExtractor

logger = logging.getLogger(__name__)

# --repr value -> (report name, checkpoint count)
REPRESENTATIONS = {"spe": ("spenet", 1), "fine": ("finet", 1), "spefine": ("spefinet", 2)}


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "eval",
        help="Score a representation on every target task with linear probes",
        description="--repr spe|fine scores one probe, --repr spefine fuses two (SpeNet then FiNet). "
                    "Without a model the raw task features are scored.",
    )
    parser.add_argument("--tasks", type=Path, required=True, help="Tasks manifest JSON")
    parser.add_argument("--repr", dest="representation", choices=list(REPRESENTATIONS), default=None,
                        help="Representation to score with the checkpoints given by --models")
    parser.add_argument("--models", type=Path, nargs="+", default=None,
                        help="Probe checkpoints: one for spe/fine, SpeNet and FiNet for spefine")
    parser.add_argument("--model", type=Path, default=None, help="Probe checkpoint (e.g. SpeNet)")
    parser.add_argument("--fuse-with", type=Path, default=None, help="Second probe fused with --model (e.g. FiNet)")
    parser.add_argument("--name", default=None, help="Representation name in the report")
    parser.add_argument("--splitter", default=None, help="Splitting method to record in the report")
    parser.add_argument("--loss", choices=[k.value for k in LossKind], default=LossKind.HINGE.value)
    parser.add_argument("--l2", type=float, default=1e-3)
    parser.add_argument("--iters", type=int, default=500)
    parser.add_argument("--lr", type=float, default=0.1)
    parser.add_argument("--out", type=Path, required=True, help="Report JSON")
    parser.set_defaults(handler=run)


def _checkpoints(args: argparse.Namespace) -> tuple[list[Path], Optional[str]]:
    """Checkpoint paths and default report name from either flag style."""
    if args.representation is None and args.models is None:
        if args.model is None:
            if args.fuse_with is not None:
                raise ConfigError("--fuse-with needs --model")
            return [], None
        return [args.model] + ([args.fuse_with] if args.fuse_with is not None else []), None
    if args.model is not None or args.fuse_with is not None:
        raise ConfigError("use either --repr/--models or --model/--fuse-with, not both")
    if args.representation is None or not args.models:
        raise ConfigError("--repr and --models go together")
    name, count = REPRESENTATIONS[args.representation]
    if len(args.models) != count:
        raise ConfigError(f"--repr {args.representation} takes {count} checkpoint(s), got {len(args.models)}")
    return list(args.models), name


def _extractor(args: argparse.Namespace, dim: int) -> Extractor:
    paths, default_name = _checkpoints(args)
    if not paths:
        return IdentityExtractor(dim, args.name or "identity")
    if len(paths) == 1:
        return ProbeExtractor(load_probe(paths[0]), args.name or default_name or paths[0].stem)
    first = ProbeExtractor(load_probe(paths[0]), paths[0].stem)
    second = ProbeExtractor(load_probe(paths[1]), paths[1].stem)
    return FusedExtractor(first, second, args.name or "spefinet")


def run(args: argparse.Namespace) -> int:
    try:
        config = LinearProbeConfig(loss_kind=LossKind(args.loss), l2=args.l2, iters=args.iters, lr=args.lr)
    except ValidationError as exc:
        raise ConfigError(f"invalid linear probe settings:\n{exc}") from exc
    tasks = TaskRepository(args.tasks).load_all()
    if not tasks:
        raise ConfigError(f"{args.tasks}: no target tasks")
    report = evaluate_representation(_extractor(args, tasks[0].train.dim), tasks, config, splitter=args.splitter)
    save_report(report, args.out)
    for task in report.tasks:
        logger.info("%-12s %-8s %.4f", task.name, task.metric.value, task.score)
    logger.info("average %.4f -> %s", report.average, args.out)
    return 0
