"""
One-hidden-layer ReLU probe network.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from refinery.core.errors import NonFiniteError, ShapeError
from refinery.models.dataset import _frozen

PARAMETER_NAMES = ("w1", "b1", "w2", "b2")


@dataclass(frozen=True)
class ProbeModel:
    """
    Softmax classifier on top of a ReLU hidden layer.

    The hidden layer is the representation extractor; w1 is dim x hidden,
    w2 is hidden x classes.
    """
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    loss_history: tuple[float, ...] = ()

    def __post_init__(self):
        params = {}
        for name in PARAMETER_NAMES:
            value = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if not np.all(np.isfinite(value)):
                raise NonFiniteError(f"probe parameter {name} is not finite")
            params[name] = value
        w1, b1, w2, b2 = (params[n] for n in PARAMETER_NAMES)
        if w1.ndim != 2 or w2.ndim != 2 or b1.shape != (w1.shape[1],) or b2.shape != (w2.shape[1],):
            raise ShapeError("inconsistent probe parameter shapes")
        if w2.shape[0] != w1.shape[1]:
            raise ShapeError(f"w2 expects {w2.shape[0]} hidden units, w1 provides {w1.shape[1]}")
        if w1.shape[1] < 1:
            raise ShapeError("hidden_dim must be >= 1")
        if w2.shape[1] < 2:
            raise ShapeError("a probe needs at least 2 classes")
        for name, value in params.items():
            object.__setattr__(self, name, _frozen(value))

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def class_count(self) -> int:
        return self.w2.shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def with_parameters(self, **params) -> "ProbeModel":
        merged = {**self.parameters(), **params}
        return ProbeModel(**merged, loss_history=self.loss_history)

    def checksum(self) -> str:
        """SHA-256 over the raw parameter bytes."""
        digest = hashlib.sha256()
        for name in PARAMETER_NAMES:
            value = getattr(self, name)
            digest.update(name.encode())
            digest.update(np.asarray(value.shape, dtype=np.int64).tobytes())
            digest.update(np.ascontiguousarray(value).tobytes())
        return digest.hexdigest()
