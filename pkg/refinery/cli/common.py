"""
Shared CLI plumbing: TOML run configs with `--set` overrides, dataset
loading and common flags.
"""
import argparse
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError

from refinery.core.config import settings
from refinery.core.errors import ConfigError
from refinery.models.dataset import LabeledDataset
from refinery.repositories.finf import load_features
from refinery.repositories.hierarchy_repository import load_finer_assignment
from refinery.repositories.labels import load_labels
from refinery.schemas.pipeline import PipelineConfig
from refinery.schemas.synth import SynthSpec

logger = logging.getLogger(__name__)


def parse_override(item: str) -> tuple[list[str], Any]:
    """`a.b=value` -> (["a", "b"], value); value is a TOML literal or a bare string."""
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return [part.strip() for part in key.split(".")], value


def apply_overrides(document: dict, overrides: Sequence[str]) -> dict:
    for item in overrides:
        path, value = parse_override(item)
        node = document
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {part} is not a section")
            node = child
        node[path[-1]] = value
    return document


def load_pipeline_config(
    path: Optional[Path],
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out_dir: Optional[Path] = None,
) -> PipelineConfig:
    """
    TOML document (or the canonical synthetic run when no file is given),
    then `--set` overrides, then the dedicated flags.
    """
    if path is not None:
        try:
            document = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    else:
        document = {"synth": {}}
    apply_overrides(document, overrides)
    if seed is not None:
        document["seed"] = seed
    if out_dir is not None:
        document["output_dir"] = str(out_dir)
    try:
        return PipelineConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(f"invalid pipeline configuration:\n{exc}") from exc


def load_dataset(features: Path, labels: Optional[Path] = None, finer: Optional[Path] = None) -> LabeledDataset:
    """Features with specific labels, or with the finer labels of an assignment CSV."""
    matrix = load_features(features)
    if finer is not None:
        assignment = load_finer_assignment(finer)
        return LabeledDataset(matrix, assignment.labels, assignment.finer_class_count, level=1)
    if labels is None:
        raise ConfigError("either --labels or --finer-assignment is required")
    values, count = load_labels(labels, matrix.n_samples)
    return LabeledDataset(matrix, values, count)


def add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help=f"Random seed (default: REFINERY_DEFAULT_SEED={settings.DEFAULT_SEED})")


def seed_of(args: argparse.Namespace) -> int:
    return settings.DEFAULT_SEED if args.seed is None else args.seed


def add_config_args(parser: argparse.ArgumentParser) -> None:
    """--config/--set/--seed/--out-dir for commands driven by a PipelineConfig."""
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML run configuration (default: canonical synthetic run)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="Override one configuration field (repeatable)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--out-dir", type=Path, default=None, help="Run directory")


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return load_pipeline_config(args.config, args.overrides, args.seed, args.out_dir)


def int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def synth_spec_from_args(args: argparse.Namespace) -> SynthSpec:
    try:
        return SynthSpec(
            n_classes=args.classes,
            subconcepts_per_class=args.subconcepts,
            samples_per_subconcept=args.per,
            dim=args.dim,
            within_std=args.std,
            separation=args.sep,
            seed=seed_of(args),
            train_per_subconcept=args.train_per,
            test_per_subconcept=args.test_per,
            shift=args.shift,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid synthetic spec:\n{exc}") from exc
