"""
Target tasks, fused representations and planted ground truth.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from refinery.core.errors import ShapeError
from refinery.models.dataset import FeatureMatrix, LabeledDataset, _frozen


class Metric(str, enum.Enum):
    """Standard evaluation metric of a target task."""
    ACCURACY = "accuracy"
    MAP = "mAP"


class TaskKind(str, enum.Enum):
    """Synthetic target-task families."""
    SUBCONCEPT = "subconcept"
    RECOMBINED = "recombined"
    SHIFTED = "shifted"


@dataclass(frozen=True)
class TargetTask:
    """
    Train/test split scored with a linear probe.

    mAP tasks may carry per-sample label sets as boolean relevance matrices
    (n_samples x class_count); otherwise relevance follows the labels.
    """
    name: str
    train: LabeledDataset
    test: LabeledDataset
    metric: Metric = Metric.ACCURACY
    train_relevance: Optional[np.ndarray] = None
    test_relevance: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.train.dim != self.test.dim:
            raise ShapeError(f"task {self.name}: train dim {self.train.dim} != test dim {self.test.dim}")
        if self.train.class_count != self.test.class_count:
            raise ShapeError(f"task {self.name}: train/test class counts differ")
        object.__setattr__(self, "metric", Metric(self.metric))
        for name, split in (("train_relevance", self.train), ("test_relevance", self.test)):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.array(value, dtype=bool, copy=True)
            if value.shape != (split.n_samples, split.class_count):
                raise ShapeError(f"task {self.name}: {name} has shape {value.shape}")
            object.__setattr__(self, name, _frozen(value))
        if self.multilabel and self.metric is not Metric.MAP:
            raise ShapeError(f"task {self.name}: label sets require the mAP metric")

    @property
    def multilabel(self) -> bool:
        return self.train_relevance is not None or self.test_relevance is not None

    @property
    def class_count(self) -> int:
        return self.train.class_count

    def relevance(self, split: str) -> np.ndarray:
        """Boolean relevance matrix for 'train' or 'test'."""
        explicit = getattr(self, f"{split}_relevance")
        if explicit is not None:
            return explicit
        data: LabeledDataset = getattr(self, split)
        return data.labels[:, None] == np.arange(data.class_count)[None, :]


@dataclass(frozen=True)
class FusedRepresentation:
    """Row-wise concatenation of normalized specific and finer features."""
    matrix: FeatureMatrix
    source_dims: tuple[int, ...]

    def __post_init__(self):
        if sum(self.source_dims) != self.matrix.dim:
            raise ShapeError(f"fused dim {self.matrix.dim} != sum of sources {self.source_dims}")

    @property
    def dim(self) -> int:
        return self.matrix.dim


@dataclass(frozen=True)
class PlantedTruth:
    """Generator's hidden labeling: subconcepts refine classes."""
    class_labels: np.ndarray
    subconcept_labels: np.ndarray
    centers: np.ndarray
    subconcepts_per_class: int

    def __post_init__(self):
        for name in ("class_labels", "subconcept_labels", "centers"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), copy=True)))
        if self.class_labels.shape != self.subconcept_labels.shape:
            raise ShapeError("class and subconcept labels must align")

    @property
    def n_subconcepts(self) -> int:
        return self.centers.shape[0]

    def subconcept_class(self) -> np.ndarray:
        """Source class of every subconcept."""
        return np.arange(self.n_subconcepts) // self.subconcepts_per_class
