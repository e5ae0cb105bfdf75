"""
`synth`: planted-subconcept source data and target tasks.
"""
import argparse
import logging
from pathlib import Path

from refinery.cli.common import add_seed, synth_spec_from_args
from refinery.models.tasks import TaskKind
from refinery.services.synth_service import generate_source, generate_targets, save_synth_artifacts

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="Generate a planted synthetic source dataset and target tasks")
    parser.add_argument("--classes", type=int, default=10, help="Number of specific classes C")
    parser.add_argument("--subconcepts", type=int, default=3, help="Hidden subconcepts per class G")
    parser.add_argument("--per", type=int, default=60, help="Source samples per subconcept")
    parser.add_argument("--dim", type=int, default=16, help="Feature dimension")
    parser.add_argument("--sep", type=float, default=6.0, help="Minimum center distance in within-class stds")
    parser.add_argument("--std", type=float, default=0.25, help="Within-subconcept standard deviation")
    parser.add_argument("--train-per", type=int, default=20, help="Target train samples per subconcept")
    parser.add_argument("--test-per", type=int, default=20, help="Target test samples per subconcept")
    parser.add_argument("--shift", type=float, default=1.0, help="Mean shift of the shifted task, in stds")
    parser.add_argument("--kinds", nargs="+", choices=[k.value for k in TaskKind],
                        default=[k.value for k in TaskKind], help="Target task kinds")
    add_seed(parser)
    parser.add_argument("--out-dir", type=Path, required=True, help="Output directory")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    spec = synth_spec_from_args(args)
    dataset, truth = generate_source(spec)
    tasks = generate_targets(truth, spec, [TaskKind(k) for k in args.kinds])
    written = save_synth_artifacts(args.out_dir, dataset, truth, tasks)
    for name, path in written.items():
        logger.info("%s: %s", name, path)
    return 0
