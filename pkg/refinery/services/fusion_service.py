"""
SpeFiNet fusion: per-row L-inf normalization and concatenation, plus the
extractors the evaluation harness applies to raw samples.
"""
from typing import Protocol

import numpy as np

from refinery.core.errors import ShapeError
from refinery.models.dataset import FeatureMatrix
from refinery.models.probe import ProbeModel
from refinery.models.tasks import FusedRepresentation
from refinery.services.probe_service import extract_features


def linf_normalize(features: FeatureMatrix) -> FeatureMatrix:
    """Divide each row by its max-abs entry; all-zero rows pass through."""
    values = features.values
    peak = np.max(np.abs(values), axis=1, keepdims=True) if values.shape[1] else np.zeros((values.shape[0], 1))
    return FeatureMatrix(np.divide(values, peak, out=values.copy(), where=peak > 0))


def fuse(spe: FeatureMatrix, fine: FeatureMatrix) -> FusedRepresentation:
    """Concatenate Z(spe) and Z(fine) row by row, specific half first."""
    if spe.n_samples != fine.n_samples:
        raise ShapeError(f"cannot fuse {spe.n_samples} specific rows with {fine.n_samples} finer rows")
    matrix = np.hstack([linf_normalize(spe).values, linf_normalize(fine).values])
    return FusedRepresentation(FeatureMatrix(matrix), (spe.dim, fine.dim))


class Extractor(Protocol):
    """Frozen map from raw samples to a representation."""
    name: str

    @property
    def dim(self) -> int: ...

    def __call__(self, features: FeatureMatrix) -> FeatureMatrix: ...

    def fingerprint(self) -> str: ...


class IdentityExtractor:
    """Raw inputs as the representation."""

    def __init__(self, dim: int, name: str = "identity"):
        self._dim = dim
        self.name = name

    @property
    def dim(self) -> int:
        return self._dim

    def __call__(self, features: FeatureMatrix) -> FeatureMatrix:
        if features.dim != self._dim:
            raise ShapeError(f"expected dim {self._dim}, got {features.dim}")
        return features

    def fingerprint(self) -> str:
        return f"identity:{self._dim}"


class ProbeExtractor:
    """Penultimate-layer activations of a trained probe."""

    def __init__(self, model: ProbeModel, name: str):
        self.model = model
        self.name = name

    @property
    def dim(self) -> int:
        return self.model.hidden_dim

    def __call__(self, features: FeatureMatrix) -> FeatureMatrix:
        return extract_features(self.model, features)

    def fingerprint(self) -> str:
        return self.model.checksum()


class FusedExtractor:
    """SpeFiNet: fuse(spe(x), fine(x))."""

    def __init__(self, spe: Extractor, fine: Extractor, name: str = "spefinet"):
        self.spe = spe
        self.fine = fine
        self.name = name

    @property
    def dim(self) -> int:
        return self.spe.dim + self.fine.dim

    def __call__(self, features: FeatureMatrix) -> FeatureMatrix:
        return fuse(self.spe(features), self.fine(features)).matrix

    def fingerprint(self) -> str:
        return f"{self.spe.fingerprint()}+{self.fine.fingerprint()}"
