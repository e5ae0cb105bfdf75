"""
Feature matrices, labeled datasets and per-class views.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from refinery.core.errors import LabelError, NonFiniteError, ShapeError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FeatureMatrix:
    """
    N x d dense sample representations.

    Held as float64 in memory; stored as float32 on disk.
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ShapeError(f"feature matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("feature matrix contains NaN or Inf")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def empty(cls, dim: int) -> "FeatureMatrix":
        return cls(np.zeros((0, dim)))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def rows(self, indices) -> "FeatureMatrix":
        """Sub-matrix of the given rows, in the given order."""
        return FeatureMatrix(self.values[np.asarray(indices, dtype=np.int64)])


@dataclass(frozen=True)
class ClassView:
    """Global sample indices of one class, strictly increasing."""
    class_id: int
    sample_indices: np.ndarray

    def __post_init__(self):
        indices = np.array(self.sample_indices, dtype=np.int64, copy=True)
        if indices.size > 1 and np.any(np.diff(indices) <= 0):
            raise LabelError(f"class {self.class_id}: indices must be strictly increasing")
        object.__setattr__(self, "sample_indices", _frozen(indices))

    @property
    def size(self) -> int:
        return int(self.sample_indices.size)


@dataclass(frozen=True)
class LabeledDataset:
    """Features plus a 0-based class label per sample at one hierarchy level."""
    features: FeatureMatrix
    labels: np.ndarray
    class_count: int
    level: int = 0

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if labels.ndim != 1 or labels.size != self.features.n_samples:
            raise ShapeError(
                f"labels length {labels.size} != n_samples {self.features.n_samples}"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise LabelError(f"labels must lie in [0, {self.class_count})")
        counts = np.bincount(labels, minlength=self.class_count)
        if labels.size and np.any(counts == 0):
            empty = np.flatnonzero(counts == 0).tolist()
            raise LabelError(f"classes with zero samples: {empty}")
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n_samples(self) -> int:
        return self.features.n_samples

    @property
    def dim(self) -> int:
        return self.features.dim

    def class_counts(self) -> np.ndarray:
        """N_i for every class; sums to N."""
        return np.bincount(self.labels, minlength=self.class_count)

    def with_features(self, features: FeatureMatrix) -> "LabeledDataset":
        """Same labels on another representation of the same samples."""
        if features.n_samples != self.n_samples:
            raise ShapeError(
                f"representation has {features.n_samples} rows, dataset has {self.n_samples}"
            )
        return LabeledDataset(features, self.labels, self.class_count, self.level)


def class_views(dataset: LabeledDataset) -> list[ClassView]:
    """One view per class; the views partition all sample indices."""
    if dataset.class_count == 0:
        return []
    order = np.argsort(dataset.labels, kind="stable")
    bounds = np.cumsum(dataset.class_counts())[:-1]
    return [
        ClassView(class_id=c, sample_indices=np.sort(chunk))
        for c, chunk in enumerate(np.split(order, bounds))
    ]
