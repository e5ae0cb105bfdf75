"""
Planted-subconcept generator: source datasets whose classes are mixtures of
hidden Gaussian subconcepts, target tasks probing those subconcepts, and the
recovery score of a finer labeling against the planted truth.
"""
import csv
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from sklearn.metrics import adjusted_rand_score

from refinery.core.errors import HierarchyError, SynthError
from refinery.core.parallel import derive_rng
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.hierarchy import FinerAssignment
from refinery.models.tasks import Metric, PlantedTruth, TargetTask, TaskKind
from refinery.repositories.finf import save_features
from refinery.repositories.labels import save_labels
from refinery.repositories.task_repository import TaskRepository
from refinery.schemas.report import RecoveryReport
from refinery.schemas.synth import SynthSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAX_CENTER_ATTEMPTS = 1000
TASK_METRICS = {
    TaskKind.SUBCONCEPT: Metric.ACCURACY,
    TaskKind.RECOMBINED: Metric.MAP,
    TaskKind.SHIFTED: Metric.ACCURACY,
}


def draw_centers(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """
    Subconcept centers with pairwise distance >= separation * within_std.

    Candidates come from an isotropic Gaussian frame whose expected pairwise
    distance is 1.25x the required minimum; each center gets
    MAX_CENTER_ATTEMPTS tries.
    """
    min_distance = spec.separation * spec.within_std
    scale = 1.25 * min_distance / np.sqrt(2.0 * spec.dim)
    centers = np.empty((spec.n_subconcepts, spec.dim))
    for index in range(spec.n_subconcepts):
        for _ in range(MAX_CENTER_ATTEMPTS):
            candidate = rng.normal(0.0, scale, size=spec.dim)
            if index == 0 or np.min(np.linalg.norm(centers[:index] - candidate, axis=1)) >= min_distance:
                centers[index] = candidate
                break
        else:
            raise SynthError(
                f"could not place subconcept {index} of {spec.n_subconcepts} at distance "
                f">= {min_distance:g} in dim {spec.dim} after {MAX_CENTER_ATTEMPTS} attempts"
            )
    return centers


def _sample_around(centers: np.ndarray, per_center: int, std: float, rng: np.random.Generator) -> np.ndarray:
    """per_center isotropic draws around every center, center-major."""
    noise = rng.normal(0.0, std, size=(centers.shape[0] * per_center, centers.shape[1]))
    return np.repeat(centers, per_center, axis=0) + noise


def generate_source(spec: SynthSpec) -> tuple[LabeledDataset, PlantedTruth]:
    """
    Source dataset of spec.n_classes classes, each a union of G subconcepts.

    Samples are class-major; subconcept c*G+g belongs to class c.
    """
    rng = derive_rng(spec.seed, 0)
    centers = draw_centers(spec, rng)
    features = _sample_around(centers, spec.samples_per_subconcept, spec.within_std, rng)
    subconcepts = np.repeat(np.arange(spec.n_subconcepts), spec.samples_per_subconcept)
    classes = subconcepts // spec.subconcepts_per_class
    dataset = LabeledDataset(FeatureMatrix(features), classes, spec.n_classes)
    truth = PlantedTruth(
        class_labels=classes,
        subconcept_labels=subconcepts,
        centers=centers,
        subconcepts_per_class=spec.subconcepts_per_class,
    )
    logger.info(
        "synthetic source: %d classes x %d subconcepts, %d samples, dim %d",
        spec.n_classes, spec.subconcepts_per_class, dataset.n_samples, spec.dim,
    )
    return dataset, truth


def recombined_groups(n_classes: int, per_class: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """
    Target classes built from subconcepts of two different source classes.

    Source classes are paired by a random permutation; pair (a, b) yields G
    target classes {(a, g), (b, (g+1) % G)}. With an odd class count the
    unpaired class keeps its subconcepts as singleton groups.
    """
    order = rng.permutation(n_classes)
    groups: list[tuple[int, ...]] = []
    for p in range(n_classes // 2):
        a, b = int(order[2 * p]), int(order[2 * p + 1])
        for g in range(per_class):
            groups.append((a * per_class + g, b * per_class + (g + 1) % per_class))
    if n_classes % 2:
        last = int(order[-1])
        groups.extend((last * per_class + g,) for g in range(per_class))
    return groups


def _task_split(
    centers: np.ndarray,
    per_center: int,
    std: float,
    subconcept_target: np.ndarray,
    class_count: int,
    rng: np.random.Generator,
) -> LabeledDataset:
    features = _sample_around(centers, per_center, std, rng)
    labels = np.repeat(subconcept_target, per_center)
    return LabeledDataset(FeatureMatrix(features), labels, class_count)


def generate_targets(
    truth: PlantedTruth,
    spec: SynthSpec,
    kinds: Optional[Iterable[TaskKind]] = None,
) -> list[TargetTask]:
    """
    Fresh train/test samples from the planted process, one task per kind.

    Each kind draws from its own stream, disjoint from the source stream, so
    the suite does not depend on which other kinds are requested.
    """
    kinds = list(TaskKind) if kinds is None else [TaskKind(k) for k in kinds]
    all_kinds = list(TaskKind)
    tasks = []
    for kind in kinds:
        rng = derive_rng(spec.seed, 1, all_kinds.index(kind))
        centers = np.asarray(truth.centers)
        target = np.arange(truth.n_subconcepts)
        class_count = truth.n_subconcepts
        if kind is TaskKind.RECOMBINED:
            groups = recombined_groups(spec.n_classes, spec.subconcepts_per_class, rng)
            for index, group in enumerate(groups):
                target[list(group)] = index
            class_count = len(groups)
        elif kind is TaskKind.SHIFTED:
            directions = rng.normal(size=centers.shape)
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            centers = centers + spec.shift * spec.within_std * directions

        train = _task_split(centers, spec.train_per_subconcept, spec.within_std, target, class_count, rng)
        test = _task_split(centers, spec.test_per_subconcept, spec.within_std, target, class_count, rng)
        tasks.append(TargetTask(name=kind.value, train=train, test=test, metric=TASK_METRICS[kind]))
        logger.info("target task %s: %d classes, %d train / %d test", kind.value, class_count,
                    train.n_samples, test.n_samples)
    return tasks


def planted_ari(assignment: FinerAssignment, truth: PlantedTruth) -> RecoveryReport:
    """Adjusted Rand index against the planted subconcepts, globally and per class."""
    if assignment.n_samples != truth.subconcept_labels.size:
        raise HierarchyError(
            f"finer labels cover {assignment.n_samples} samples, truth has {truth.subconcept_labels.size}"
        )
    if not np.array_equal(assignment.specific_labels(), truth.class_labels):
        raise HierarchyError("finer classes do not refine the planted class labels")

    n_classes = int(truth.class_labels.max()) + 1 if truth.class_labels.size else 0
    per_class = []
    for c in range(n_classes):
        members = truth.class_labels == c
        per_class.append(float(adjusted_rand_score(truth.subconcept_labels[members], assignment.labels[members])))
    report = RecoveryReport(
        global_ari=float(adjusted_rand_score(truth.subconcept_labels, assignment.labels)),
        per_class_ari=per_class,
        k_per_class=assignment.k_per_class().tolist(),
        subconcepts_per_class=truth.subconcepts_per_class,
    )
    logger.info(
        "planted recovery: global ARI %.4f, %d/%d classes with K = %d",
        report.global_ari, report.exact_classes, n_classes, truth.subconcepts_per_class,
    )
    return report


def save_truth(truth: PlantedTruth, path: PathLike) -> Path:
    """Write the `sample,class,subconcept` CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("sample", "class", "subconcept"))
        for sample, (c, s) in enumerate(zip(truth.class_labels.tolist(), truth.subconcept_labels.tolist())):
            writer.writerow((sample, c, s))
    return path


def save_synth_artifacts(
    out_dir: PathLike,
    dataset: LabeledDataset,
    truth: PlantedTruth,
    tasks: Sequence[TargetTask],
) -> dict[str, Path]:
    """Source features and labels, planted truth and the tasks manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return {
        "features": save_features(dataset.features, out_dir / "source.finf"),
        "labels": save_labels(dataset.labels, out_dir / "source_labels.csv"),
        "truth": save_truth(truth, out_dir / "truth.csv"),
        "tasks": TaskRepository(out_dir / "tasks.json").save_all(list(tasks)),
    }
