"""
`train-probe`, `extract` and `fuse`: the representation commands.
"""
import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from refinery.cli.common import add_seed, load_dataset, seed_of
from refinery.core.errors import ConfigError
from refinery.repositories.finf import load_features, save_features
from refinery.repositories.model_repository import load_probe, save_probe
from refinery.schemas.training import TrainConfig
from refinery.services.fusion_service import fuse
from refinery.services.probe_service import extract_features, train_probe

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    train = subparsers.add_parser("train-probe", help="Train a one-hidden-layer probe network")
    train.add_argument("--features", type=Path, required=True, help="FINF training inputs")
    labels = train.add_mutually_exclusive_group(required=True)
    labels.add_argument("--labels", type=Path, help="sample,label CSV (SpeNet)")
    labels.add_argument("--finer-assignment", type=Path, help="finer assignment CSV (FiNet)")
    train.add_argument("--hidden", type=int, default=10, help="Penultimate-layer width")
    train.add_argument("--epochs", type=int, default=60)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--lr", type=float, default=0.01)
    train.add_argument("--momentum", type=float, default=0.9)
    train.add_argument("--weight-decay", type=float, default=1e-4)
    add_seed(train)
    train.add_argument("--out", type=Path, required=True, help="Checkpoint path")
    train.set_defaults(handler=run_train)

    extract = subparsers.add_parser("extract", help="Penultimate-layer features of a trained probe")
    extract.add_argument("--model", type=Path, required=True, help="Probe checkpoint")
    extract.add_argument("--features", type=Path, required=True, help="FINF inputs")
    extract.add_argument("--out", type=Path, required=True, help="FINF output")
    extract.set_defaults(handler=run_extract)

    fuse_parser = subparsers.add_parser("fuse", help="L-inf normalize and concatenate two representations")
    fuse_parser.add_argument("--spe", type=Path, required=True, help="FINF specific-probe features")
    fuse_parser.add_argument("--fine", type=Path, required=True, help="FINF finer-probe features")
    fuse_parser.add_argument("--out", type=Path, required=True, help="FINF output")
    fuse_parser.set_defaults(handler=run_fuse)


def run_train(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.features, args.labels, args.finer_assignment)
    try:
        config = TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            momentum=args.momentum,
            weight_decay=args.weight_decay,
            seed=seed_of(args),
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid training settings:\n{exc}") from exc
    model = train_probe(dataset, args.hidden, config)
    logger.info("probe saved to %s", save_probe(model, args.out))
    return 0


def run_extract(args: argparse.Namespace) -> int:
    features = extract_features(load_probe(args.model), load_features(args.features))
    logger.info("%d x %d features saved to %s", features.n_samples, features.dim, save_features(features, args.out))
    return 0


def run_fuse(args: argparse.Namespace) -> int:
    fused = fuse(load_features(args.spe), load_features(args.fine))
    logger.info("fused dim %d %s saved to %s", fused.dim, fused.source_dims, save_features(fused.matrix, args.out))
    return 0
