"""
Linear binary classifiers and one-versus-all ensembles.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from refinery.core.errors import NonFiniteError, ShapeError
from refinery.models.dataset import _frozen


class LossKind(str, enum.Enum):
    """Training loss of a linear model."""
    LOGISTIC = "logistic"   # probabilistic scores in (0, 1)
    HINGE = "hinge"         # raw margins


@dataclass(frozen=True)
class BinaryLinearModel:
    """w.x + b, scored through a sigmoid for the logistic loss."""
    w: np.ndarray
    b: float
    loss_kind: LossKind = LossKind.LOGISTIC
    l2: float = 1e-3
    objective_history: tuple[float, ...] = ()

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise NonFiniteError("linear model parameters must be finite")
        object.__setattr__(self, "w", _frozen(w))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))

    @property
    def dim(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class OvaModel:
    """One binary model per class, all on the same input dimension."""
    models: tuple[BinaryLinearModel, ...]

    def __post_init__(self):
        models = tuple(self.models)
        if len(models) < 2:
            raise ShapeError("one-versus-all needs at least 2 classes")
        dims = {m.dim for m in models}
        if len(dims) != 1:
            raise ShapeError(f"per-class models disagree on input dim: {sorted(dims)}")
        object.__setattr__(self, "models", models)

    @property
    def class_count(self) -> int:
        return len(self.models)

    @property
    def dim(self) -> int:
        return self.models[0].dim

    def weight_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (dim x classes) weights and per-class biases."""
        w = np.stack([m.w for m in self.models], axis=1)
        b = np.array([m.b for m in self.models])
        return w, b
