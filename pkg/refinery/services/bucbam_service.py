"""
Bottom-up clustering-based merging: over-split each class with a fixed K,
dissolve clusters smaller than S, score every cluster pair with per-cluster
classifiers and merge the pairs whose cross-scores pass the thresholds.
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from refinery.core.errors import ShapeError, SplitError
from refinery.core.parallel import derive_int, derive_rng, parallel_map
from refinery.models.clustering import (
    ClusterAssignment,
    DiverseNegatives,
    MergePlan,
    SimilarityMatrix,
)
from refinery.models.dataset import ClassView, FeatureMatrix, LabeledDataset, class_views
from refinery.models.linear import BinaryLinearModel, LossKind
from refinery.repositories.finf import save_features
from refinery.repositories.report_repository import save_json, save_report
from refinery.schemas.bucbam import BucbamConfig, InitialSplitter, MergeMode, PruneStrategy
from refinery.schemas.report import BucbamClassReport, BucbamRunReport
from refinery.services.linear_service import nearest_neighbors, score, train_binary
from refinery.services.splitter_service import split_kmeans, split_random_k

logger = logging.getLogger(__name__)


def _prune(
    assignment: ClusterAssignment,
    x: np.ndarray,
    min_size: int,
    strategy: PruneStrategy,
) -> tuple[ClusterAssignment, bool]:
    """Pruned assignment plus whether the whole-class fallback fired."""
    members = assignment.member_of.copy()
    sizes = np.bincount(members, minlength=assignment.k)

    if PruneStrategy(strategy) is PruneStrategy.ONE_SHOT:
        large = sizes >= min_size
        if not large.any():
            return ClusterAssignment.single(assignment.class_id, assignment.sample_indices), True
        if large.all():
            return assignment, False
        keep = np.flatnonzero(large[members])
        orphans = np.flatnonzero(~large[members])
        members[orphans] = members[keep[nearest_neighbors(x[orphans], x[keep])]]
        renumber = np.cumsum(large) - 1
        return assignment.relabeled(renumber[members]), False

    while True:
        sizes = np.bincount(members)
        if sizes.size == 1 or sizes.min() >= min_size:
            break
        smallest = int(np.argmin(sizes))
        moving = np.flatnonzero(members == smallest)
        staying = np.flatnonzero(members != smallest)
        members[moving] = members[staying[nearest_neighbors(x[moving], x[staying])]]
        members[members > smallest] -= 1
    fallback = sizes.size == 1 and members.size < min_size
    return assignment.relabeled(members), fallback


def prune_small_clusters(
    assignment: ClusterAssignment,
    features: FeatureMatrix,
    min_size: int,
    strategy: PruneStrategy = PruneStrategy.ONE_SHOT,
) -> ClusterAssignment:
    """
    Re-attach the samples of clusters smaller than min_size.

    one_shot: each sample of a small cluster joins the cluster of its
    Euclidean 1-NN among the samples of the large clusters; with no large
    cluster the class collapses to one cluster. iterative: the smallest
    cluster below min_size is dissolved into the clusters of its members'
    1-NN among all other samples, until every cluster reaches min_size.
    """
    if features.n_samples != assignment.n_samples:
        raise ShapeError(f"{features.n_samples} feature rows for {assignment.n_samples} clustered samples")
    pruned, _ = _prune(assignment, features.values, min_size, strategy)
    return pruned


def sample_diverse_negatives(
    dataset: LabeledDataset,
    count: int,
    exclude,
    seed: int,
    replace: bool = False,
) -> DiverseNegatives:
    """
    Draw samples equiprobably across classes.

    Equivalent to picking a class uniformly, then a sample uniformly within
    it, and rejecting excluded (and, without replacement, repeated) picks.
    """
    excluded = np.zeros(dataset.n_samples, dtype=bool)
    if isinstance(exclude, (set, frozenset)):
        exclude = sorted(exclude)
    excluded[np.asarray(exclude, dtype=np.int64)] = True
    views = class_views(dataset)
    class_sizes = np.array([v.size for v in views], dtype=np.float64)
    pools = [[int(i) for i in v.sample_indices if not excluded[i]] for v in views]
    available = sum(len(p) for p in pools)
    if count < 0 or (count > available and not replace) or (count > 0 and available == 0):
        raise SplitError(f"cannot draw {count} negatives from {available} available samples")

    rng = derive_rng(seed)
    drawn = np.empty(count, dtype=np.int64)
    remaining = np.array([len(p) for p in pools], dtype=np.float64)
    for t in range(count):
        weights = remaining / class_sizes
        c = int(rng.choice(len(pools), p=weights / weights.sum()))
        pool = pools[c]
        i = int(rng.integers(len(pool)))
        drawn[t] = pool[i]
        if not replace:
            pool[i] = pool[-1]
            pool.pop()
            remaining[c] -= 1
    return DiverseNegatives(indices=drawn, seed=seed)


def train_cluster_classifiers(
    pruned: ClusterAssignment,
    dataset: LabeledDataset,
    config: BucbamConfig,
) -> list[BinaryLinearModel]:
    """
    One logistic classifier per cluster: its samples against as many diverse
    negatives (times negatives_per_positive) drawn from the whole dataset.
    """
    x = dataset.features
    classifiers = []
    for cluster in range(pruned.k):
        positives = pruned.sample_indices[pruned.member_of == cluster]
        wanted = max(1, int(round(config.negatives_per_positive * positives.size)))
        count = min(wanted, dataset.n_samples - positives.size)
        negatives = sample_diverse_negatives(
            dataset, count, positives, derive_int(config.seed, pruned.class_id, cluster)
        )
        classifiers.append(train_binary(
            x.rows(positives),
            x.rows(negatives.indices),
            LossKind.LOGISTIC,
            config.classifier_l2,
            config.classifier_iters,
            config.classifier_lr,
        ))
    return classifiers


def build_similarity_matrix(
    classifiers: Sequence[BinaryLinearModel],
    pruned: ClusterAssignment,
    features: FeatureMatrix,
) -> SimilarityMatrix:
    """M[k, l] = mean score of classifier k over the samples of cluster l."""
    if len(classifiers) != pruned.k:
        raise ShapeError(f"{len(classifiers)} classifiers for {pruned.k} clusters")
    if features.n_samples != pruned.n_samples:
        raise ShapeError(f"{features.n_samples} feature rows for {pruned.n_samples} clustered samples")
    m = np.empty((pruned.k, pruned.k))
    for k, classifier in enumerate(classifiers):
        scores = score(classifier, features)
        m[k] = np.bincount(pruned.member_of, weights=scores, minlength=pruned.k) / pruned.sizes
    return SimilarityMatrix(pruned.class_id, np.clip(m, 0.0, 1.0))


def merge_relation(m: np.ndarray, mode: MergeMode, s_high: float, s_med: float) -> np.ndarray:
    """Boolean pairwise merge relation (symmetric, diagonal ignored)."""
    high = m > s_high
    if MergeMode(mode) is MergeMode.SS:
        relation = high & high.T
    else:
        relation = (high & (m.T > s_med)) | (high.T & (m > s_med))
    np.fill_diagonal(relation, False)
    return relation


def merge_clusters(
    matrix: SimilarityMatrix,
    mode: MergeMode,
    s_high: float,
    s_med: Optional[float] = None,
) -> MergePlan:
    """Connected components of the merge relation; ordered by smallest member."""
    s_med = s_high / 2.0 if s_med is None else s_med
    relation = merge_relation(matrix.m, mode, s_high, s_med)
    components = DisjointSet(range(matrix.size))
    for k, l in zip(*np.nonzero(np.triu(relation, 1))):
        components.merge(int(k), int(l))
    ordered = sorted(tuple(sorted(int(i) for i in group)) for group in components.subsets())
    return MergePlan(matrix.class_id, tuple(ordered))


@dataclass(frozen=True)
class ClassRefinement:
    """Every intermediate artifact of one class."""
    initial: ClusterAssignment
    pruned: ClusterAssignment
    matrix: SimilarityMatrix
    plan: MergePlan
    final: ClusterAssignment
    report: BucbamClassReport


@dataclass(frozen=True)
class BucbamResult:
    classes: tuple[ClassRefinement, ...]
    report: BucbamRunReport

    @property
    def assignments(self) -> list[ClusterAssignment]:
        return [c.final for c in self.classes]

    @property
    def matrices(self) -> list[SimilarityMatrix]:
        return [c.matrix for c in self.classes]

    @property
    def plans(self) -> list[MergePlan]:
        return [c.plan for c in self.classes]


def refine_class(view: ClassView, dataset: LabeledDataset, config: BucbamConfig) -> ClassRefinement:
    """Split, prune, score and merge one specific class."""
    start = time.perf_counter()
    features = dataset.features.rows(view.sample_indices)
    seed = derive_int(config.seed, view.class_id)
    if config.initial_splitter is InitialSplitter.RANDOM:
        initial = split_random_k(view, config.k_initial, seed, shrink=True)
    else:
        initial = split_kmeans(view, features, config.k_initial, seed, shrink=True)

    pruned, fallback = _prune(initial, features.values, config.min_cluster_size, config.prune_strategy)
    if pruned.k > 1:
        classifiers = train_cluster_classifiers(pruned, dataset, config)
        matrix = build_similarity_matrix(classifiers, pruned, features)
    else:
        matrix = SimilarityMatrix(view.class_id, np.ones((1, 1)))
    plan = merge_clusters(matrix, config.merge_mode, config.s_high, config.s_medium)
    final = pruned.relabeled(plan.cluster_map()[pruned.member_of])

    report = BucbamClassReport(
        class_id=view.class_id,
        n_samples=view.size,
        k_initial=initial.k,
        k_pruned=pruned.k,
        k_merged=final.k,
        whole_class_fallback=fallback,
        seconds=time.perf_counter() - start,
    )
    logger.info("class %d: K=%d -> K^P=%d -> K^M=%d%s", view.class_id, initial.k, pruned.k, final.k,
                " (whole-class fallback)" if fallback else "")
    return ClassRefinement(initial, pruned, matrix, plan, final, report)


def bucbam_split(
    dataset: LabeledDataset,
    config: BucbamConfig,
    threads: Optional[int] = None,
) -> BucbamResult:
    """
    Refine every class of dataset; its features are the representation the
    clusters and classifiers work on. Classes run in the worker pool.
    """
    start = time.perf_counter()
    classes = parallel_map(lambda view: refine_class(view, dataset, config), class_views(dataset), threads)
    parameters = config.model_dump(mode="json")
    parameters["s_med"] = config.s_medium
    report = BucbamRunReport(
        parameters=parameters,
        classes=[c.report for c in classes],
        total_seconds=time.perf_counter() - start,
    )
    logger.info("%s: %d classes -> %d finer classes", config.label, len(classes),
                sum(c.final.k for c in classes))
    return BucbamResult(tuple(classes), report)


def export_bucbam(result: BucbamResult, out_dir: Union[str, Path]) -> list[Path]:
    """Run report JSON, one FINF similarity matrix per class, merge plans JSON."""
    out_dir = Path(out_dir)
    written = [save_report(result.report, out_dir / "bucbam_report.json")]
    for refinement in result.classes:
        matrix = refinement.matrix
        written.append(save_features(matrix.m, out_dir / f"similarity_class_{matrix.class_id}.finf"))
    written.append(save_json(
        {str(plan.class_id): [list(c) for c in plan.components] for plan in result.plans},
        out_dir / "merge_plans.json",
    ))
    return written
