"""
Append a finer level to the class hierarchy and relabel datasets onto it.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from refinery.core.errors import HierarchyError
from refinery.models.clustering import ClusterAssignment
from refinery.models.dataset import LabeledDataset
from refinery.models.hierarchy import FinerAssignment, Hierarchy, NodeMeta
from refinery.schemas.report import HierarchyViolation, ViolationKind

logger = logging.getLogger(__name__)


def add_finer_level(
    hierarchy: Hierarchy,
    assignments: Sequence[ClusterAssignment],
    labels: Optional[np.ndarray] = None,
) -> tuple[Hierarchy, FinerAssignment]:
    """
    Split every leaf class into its clusters.

    Finer classes are numbered class-major, cluster-minor. When the specific
    labels are given, each assignment must cover exactly its class's samples.
    """
    n_leaves = hierarchy.leaf_count
    by_class = {a.class_id: a for a in assignments}
    if len(by_class) != len(assignments) or sorted(by_class) != list(range(n_leaves)):
        raise HierarchyError(
            f"need one assignment per leaf class 0..{n_leaves - 1}, got {sorted(a.class_id for a in assignments)}"
        )

    all_indices = np.concatenate([np.zeros(0, np.int64)] + [by_class[c].sample_indices for c in range(n_leaves)])
    n_samples = int(all_indices.size)
    if not np.array_equal(np.sort(all_indices), np.arange(n_samples)):
        raise HierarchyError("assignments must partition the sample indices 0..N-1")
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size != n_samples:
            raise HierarchyError(f"{labels.size} labels for {n_samples} assigned samples")
        for c in range(n_leaves):
            if np.any(labels[by_class[c].sample_indices] != c):
                raise HierarchyError(f"assignment for class {c} covers samples of other classes")

    next_id = max((n for level in hierarchy.levels for n in level), default=-1) + 1
    finer_labels = np.empty(n_samples, dtype=np.int64)
    parent_map: list[int] = []
    new_level: list[int] = []
    edges = list(hierarchy.edges)
    meta = dict(hierarchy.meta)
    for c in range(n_leaves):
        assignment = by_class[c]
        offset = len(parent_map)
        finer_labels[assignment.sample_indices] = offset + assignment.member_of
        parent_node = hierarchy.leaves[c]
        for local in range(assignment.k):
            node = next_id + offset + local
            new_level.append(node)
            edges.append((parent_node, node))
            meta[node] = NodeMeta(source_class=c, local_cluster=local)
            parent_map.append(c)

    extended = Hierarchy(levels=hierarchy.levels + (tuple(new_level),), edges=tuple(edges), meta=meta)
    finer = FinerAssignment(labels=finer_labels, finer_class_count=len(parent_map), parent_map=parent_map)
    logger.info("finer level: %d specific classes -> %d finer classes", n_leaves, finer.finer_class_count)
    return extended, finer


def relabel_dataset(dataset: LabeledDataset, finer: FinerAssignment) -> LabeledDataset:
    """Same features, labels replaced by finer classes."""
    if finer.n_samples != dataset.n_samples:
        raise HierarchyError(f"finer labels cover {finer.n_samples} samples, dataset has {dataset.n_samples}")
    if not np.array_equal(finer.specific_labels(), dataset.labels):
        raise HierarchyError("finer classes do not refine the dataset's labels")
    return LabeledDataset(dataset.features, finer.labels, finer.finer_class_count, level=dataset.level + 1)


def group_by_parent(finer_labels, parent_map) -> np.ndarray:
    """Map finer labels back to their specific classes."""
    return np.asarray(parent_map, dtype=np.int64)[np.asarray(finer_labels, dtype=np.int64)]


def assignments_from_finer(finer: FinerAssignment) -> list[ClusterAssignment]:
    """Per-class cluster assignments encoded by a class-major finer labeling."""
    parents = finer.parent_map
    if parents.size > 1 and np.any(np.diff(parents) < 0):
        raise HierarchyError("finer classes are not numbered class-major")
    specific = finer.specific_labels()
    n_specific = int(parents.max()) + 1 if parents.size else 0
    offsets = np.searchsorted(parents, np.arange(n_specific))
    result = []
    for c in range(n_specific):
        indices = np.flatnonzero(specific == c)
        result.append(ClusterAssignment(c, indices, finer.labels[indices] - offsets[c]))
    return result


def validate_hierarchy(hierarchy: Hierarchy) -> list[HierarchyViolation]:
    """Leveling, single-parent and non-empty checks; violations are returned, not raised."""
    violations: list[HierarchyViolation] = []
    level_of: dict[int, int] = {}
    for level, nodes in enumerate(hierarchy.levels):
        if not nodes:
            violations.append(HierarchyViolation(kind=ViolationKind.EMPTY, message=f"level {level} has no nodes"))
        for node in nodes:
            if node in level_of:
                violations.append(HierarchyViolation(
                    kind=ViolationKind.DUPLICATE_NODE, node=node,
                    message=f"node {node} appears on levels {level_of[node]} and {level}",
                ))
            else:
                level_of[node] = level

    parents: dict[int, list[int]] = {}
    has_children: set[int] = set()
    for parent, child in hierarchy.edges:
        unknown = [n for n in (parent, child) if n not in level_of]
        if unknown:
            violations.append(HierarchyViolation(
                kind=ViolationKind.UNKNOWN_NODE, node=unknown[0],
                message=f"edge ({parent}, {child}) references unknown node {unknown[0]}",
            ))
            continue
        if level_of[child] != level_of[parent] + 1:
            violations.append(HierarchyViolation(
                kind=ViolationKind.LEVELING, node=child,
                message=f"edge ({parent}, {child}) joins level {level_of[parent]} to level {level_of[child]}",
            ))
        parents.setdefault(child, []).append(parent)
        has_children.add(parent)

    for node, level in level_of.items():
        if level == 0:
            continue
        count = len(parents.get(node, []))
        if count == 0:
            violations.append(HierarchyViolation(
                kind=ViolationKind.ORPHAN, node=node, message=f"node {node} on level {level} has no parent",
            ))
        elif count > 1:
            violations.append(HierarchyViolation(
                kind=ViolationKind.SINGLE_PARENT, node=node,
                message=f"node {node} has {count} parents {sorted(parents[node])}",
            ))
    for node, level in level_of.items():
        if level < hierarchy.depth - 1 and node not in has_children:
            violations.append(HierarchyViolation(
                kind=ViolationKind.EMPTY, node=node, message=f"node {node} on level {level} has no finer classes",
            ))
    return violations
