"""
Per-class clustering artifacts: assignments, k-means fits, similarity
matrices, merge plans and diverse negative sets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from refinery.core.errors import HierarchyError, ShapeError
from refinery.models.dataset import _frozen


@dataclass(frozen=True)
class ClusterAssignment:
    """
    Split of one specific class into K_i finer clusters.

    member_of[j] is the cluster of sample_indices[j]. Clusters are numbered
    0..k-1 and none is empty.
    """
    class_id: int
    sample_indices: np.ndarray
    member_of: np.ndarray
    converged: bool = True

    def __post_init__(self):
        indices = np.array(self.sample_indices, dtype=np.int64, copy=True)
        members = np.array(self.member_of, dtype=np.int64, copy=True)
        if indices.shape != members.shape or indices.ndim != 1:
            raise ShapeError(
                f"class {self.class_id}: {members.size} memberships for {indices.size} samples"
            )
        if members.size:
            if members.min() < 0:
                raise HierarchyError(f"class {self.class_id}: negative cluster index")
            sizes = np.bincount(members)
            if np.any(sizes == 0):
                raise HierarchyError(
                    f"class {self.class_id}: empty clusters {np.flatnonzero(sizes == 0).tolist()}"
                )
        object.__setattr__(self, "sample_indices", _frozen(indices))
        object.__setattr__(self, "member_of", _frozen(members))

    @classmethod
    def single(cls, class_id: int, sample_indices) -> "ClusterAssignment":
        """Whole class as one cluster."""
        indices = np.asarray(sample_indices, dtype=np.int64)
        return cls(class_id, indices, np.zeros(indices.size, dtype=np.int64))

    @property
    def k(self) -> int:
        return int(self.member_of.max()) + 1 if self.member_of.size else 0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.member_of, minlength=self.k)

    @property
    def n_samples(self) -> int:
        return int(self.member_of.size)

    def cluster_positions(self, cluster: int) -> np.ndarray:
        """Positions (within the class) of the members of one cluster."""
        return np.flatnonzero(self.member_of == cluster)

    def relabeled(self, member_of) -> "ClusterAssignment":
        return ClusterAssignment(self.class_id, self.sample_indices, member_of, self.converged)


def compact_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber labels to 0..k-1 in order of first appearance."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return labels.copy()
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


@dataclass(frozen=True)
class KMeansResult:
    """Lloyd fit: centroids, hard nearest-centroid labels, inertia trace."""
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...] = ()
    repairs: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class SimilarityMatrix:
    """m[k, l] = mean score of classifier k over the samples of cluster l."""
    class_id: int
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"similarity matrix must be square, got {m.shape}")
        if m.size and (m.min() < 0.0 or m.max() > 1.0):
            raise ShapeError("similarity entries must lie in [0, 1]")
        object.__setattr__(self, "m", _frozen(m))

    @property
    def size(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class MergePlan:
    """Connected components of the merge relation over pruned clusters."""
    class_id: int
    components: tuple[tuple[int, ...], ...]

    @property
    def k_merged(self) -> int:
        return len(self.components)

    def cluster_map(self) -> np.ndarray:
        """Pruned-cluster index -> merged-cluster index."""
        size = sum(len(c) for c in self.components)
        mapping = np.empty(size, dtype=np.int64)
        for target, component in enumerate(self.components):
            mapping[list(component)] = target
        return mapping


@dataclass(frozen=True)
class DiverseNegatives:
    """Global sample indices drawn class-equiprobably."""
    indices: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return int(self.indices.size)
