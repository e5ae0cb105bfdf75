"""
`split`, `bucbam` and `stats`: building and inspecting the finer level.
"""
import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from refinery.cli.common import add_seed, load_dataset, seed_of
from refinery.core.errors import ConfigError
from refinery.models.dataset import LabeledDataset
from refinery.models.hierarchy import FinerAssignment, Hierarchy
from refinery.repositories.finf import load_features
from refinery.repositories.hierarchy_repository import load_finer_assignment, save_finer_assignment, save_hierarchy
from refinery.repositories.model_repository import load_probe
from refinery.schemas.bucbam import BucbamConfig, InitialSplitter, MergeMode, PruneStrategy
from refinery.schemas.splitting import SplitMethod, SplitterConfig
from refinery.services.bucbam_service import bucbam_split, export_bucbam
from refinery.services.hierarchy_service import add_finer_level, assignments_from_finer
from refinery.services.probe_service import extract_features
from refinery.services.splitter_service import split_dataset
from refinery.services.stats_service import class_projections, compute_cluster_stats, export_stats

logger = logging.getLogger(__name__)


def _add_input_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--features", type=Path, required=True,
                        help="FINF representation to cluster (e.g. SpeNet features)")
    parser.add_argument("--labels", type=Path, required=True, help="sample,label CSV of the specific classes")
    parser.add_argument("--spe-model", type=Path, default=None,
                        help="Probe checkpoint applied to --features before clustering")
    add_seed(parser)
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="Output directory (default: the directory of --out)")
    parser.add_argument("--out", type=Path, default=None,
                        help="Finer assignment CSV (default: OUT_DIR/finer_assignment.csv)")


def register(subparsers) -> None:
    split = subparsers.add_parser("split", help="Split every class with a baseline method")
    _add_input_args(split)
    split.add_argument("--method", choices=[m.value for m in SplitMethod if m is not SplitMethod.BUCBAM],
                       default=SplitMethod.KMEANS.value)
    split.add_argument("--k", type=int, default=16, help="Clusters per class (random, kmeans, spectral)")
    split.add_argument("--n-neighbors", type=int, default=10, help="k-NN graph size (spectral)")
    split.add_argument("--damping", type=float, default=0.7, help="Affinity propagation damping")
    split.add_argument("--preference", type=float, default=None, help="Affinity preference (default: median)")
    split.add_argument("--bandwidth", type=float, default=1.0, help="Mean-shift bandwidth")
    split.set_defaults(handler=run_split)

    bucbam = subparsers.add_parser("bucbam", help="Split, prune and merge every class")
    _add_input_args(bucbam)
    bucbam.add_argument("--k", type=int, default=32, help="Over-split size K")
    bucbam.add_argument("--min-size", type=int, default=15, help="Pruning floor S")
    bucbam.add_argument("--s-high", type=float, default=0.8, help="High score S_H")
    bucbam.add_argument("--s-med", type=float, default=None, help="Medium score S_M (default S_H/2)")
    bucbam.add_argument("--merge", "--mode", dest="merge", choices=[m.value for m in MergeMode],
                        default=MergeMode.SS.value)
    bucbam.add_argument("--prune", choices=[p.value for p in PruneStrategy], default=PruneStrategy.ITERATIVE.value)
    bucbam.add_argument("--initial", choices=[i.value for i in InitialSplitter], default=InitialSplitter.KMEANS.value)
    bucbam.set_defaults(handler=run_bucbam)

    stats = subparsers.add_parser("stats", help="Cluster size/variance histograms and per-class PCA")
    stats.add_argument("--features", type=Path, required=True, help="FINF representation")
    stats.add_argument("--assignment", "--assignments", dest="assignment", type=Path, required=True,
                       help="finer assignment CSV")
    stats.add_argument("--out-dir", type=Path, required=True, help="Output directory")
    stats.set_defaults(handler=run_stats)


def _output_paths(args: argparse.Namespace) -> tuple[Path, Path]:
    """(output directory, assignments CSV) from --out-dir and/or --out."""
    if args.out_dir is None and args.out is None:
        raise ConfigError("one of --out-dir or --out is required")
    out_dir = args.out_dir if args.out_dir is not None else args.out.parent
    return out_dir, args.out if args.out is not None else out_dir / "finer_assignment.csv"


def _write_level(assignments, labels, class_count: int, args: argparse.Namespace) -> FinerAssignment:
    out_dir, assignment_path = _output_paths(args)
    hierarchy, finer = add_finer_level(Hierarchy.root(class_count), assignments, labels)
    save_hierarchy(hierarchy, out_dir / "hierarchy.json")
    save_finer_assignment(finer, assignment_path)
    logger.info("%d specific classes -> %d finer classes in %s", class_count, finer.finer_class_count, assignment_path)
    return finer


def _load_input(args: argparse.Namespace) -> LabeledDataset:
    dataset = load_dataset(args.features, args.labels)
    if args.spe_model is None:
        return dataset
    return dataset.with_features(extract_features(load_probe(args.spe_model), dataset.features))


def run_split(args: argparse.Namespace) -> int:
    dataset = _load_input(args)
    try:
        config = SplitterConfig(
            method=SplitMethod(args.method),
            k=args.k,
            n_neighbors=args.n_neighbors,
            damping=args.damping,
            preference=args.preference,
            bandwidth=args.bandwidth,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid splitter settings:\n{exc}") from exc
    assignments = split_dataset(dataset, dataset.features, config, seed_of(args))
    _write_level(assignments, dataset.labels, dataset.class_count, args)
    return 0


def run_bucbam(args: argparse.Namespace) -> int:
    dataset = _load_input(args)
    try:
        config = BucbamConfig(
            k_initial=args.k,
            min_cluster_size=args.min_size,
            s_high=args.s_high,
            s_med=args.s_med,
            merge_mode=MergeMode(args.merge),
            prune_strategy=PruneStrategy(args.prune),
            initial_splitter=InitialSplitter(args.initial),
            seed=seed_of(args),
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid BUCBAM settings:\n{exc}") from exc
    out_dir, _ = _output_paths(args)
    result = bucbam_split(dataset, config)
    export_bucbam(result, out_dir)
    _write_level(result.assignments, dataset.labels, dataset.class_count, args)
    return 0


def run_stats(args: argparse.Namespace) -> int:
    features = load_features(args.features)
    assignments = assignments_from_finer(load_finer_assignment(args.assignment))
    stats = compute_cluster_stats(assignments, features)
    for path in export_stats(stats, class_projections(assignments, features), args.out_dir):
        logger.info("wrote %s", path)
    return 0
