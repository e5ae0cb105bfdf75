"""
Leveled class hierarchy and the finer labeling attached to it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from refinery.core.errors import HierarchyError
from refinery.models.dataset import _frozen


@dataclass(frozen=True)
class NodeMeta:
    """Where a node comes from: its source class and local cluster index."""
    source_class: int
    local_cluster: Optional[int] = None


@dataclass(frozen=True)
class Hierarchy:
    """
    Leveled DAG of class nodes with is-a edges.

    levels[l] lists the node ids of level l; edges connect level l to l+1.
    The i-th node of the last level is leaf class i.
    """
    levels: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...] = ()
    meta: dict[int, NodeMeta] = field(default_factory=dict)

    @classmethod
    def root(cls, n_classes: int) -> "Hierarchy":
        """Single-level hierarchy of the specific classes."""
        ids = tuple(range(n_classes))
        return cls(levels=(ids,), edges=(), meta={i: NodeMeta(source_class=i) for i in ids})

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def leaves(self) -> tuple[int, ...]:
        return self.levels[-1] if self.levels else ()

    @property
    def leaf_count(self) -> int:
        return len(self.leaves)

    def level_of(self) -> dict[int, int]:
        """Node id -> level index (first occurrence)."""
        index: dict[int, int] = {}
        for level, nodes in enumerate(self.levels):
            for node in nodes:
                index.setdefault(node, level)
        return index

    def children(self, node: int) -> list[int]:
        return [c for p, c in self.edges if p == node]

    def parents(self, node: int) -> list[int]:
        return [p for p, c in self.edges if c == node]


@dataclass(frozen=True)
class FinerAssignment:
    """
    Per-sample finer class at level l+1.

    parent_map[j] is the specific (leaf, level l) class index of finer class j.
    """
    labels: np.ndarray
    finer_class_count: int
    parent_map: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        parents = np.array(self.parent_map, dtype=np.int64, copy=True)
        if parents.size != self.finer_class_count:
            raise HierarchyError(
                f"parent_map has {parents.size} entries for {self.finer_class_count} finer classes"
            )
        if labels.size:
            if labels.min() < 0 or labels.max() >= self.finer_class_count:
                raise HierarchyError("finer labels out of range")
            if np.any(np.bincount(labels, minlength=self.finer_class_count) == 0):
                raise HierarchyError("every finer class must be non-empty")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "parent_map", _frozen(parents))

    @property
    def n_samples(self) -> int:
        return int(self.labels.size)

    def specific_labels(self) -> np.ndarray:
        """Grouping finer labels by parent gives back the specific labeling."""
        return self.parent_map[self.labels]

    def k_per_class(self) -> np.ndarray:
        """K_i for every specific class."""
        n_specific = int(self.parent_map.max()) + 1 if self.parent_map.size else 0
        return np.bincount(self.parent_map, minlength=n_specific)
