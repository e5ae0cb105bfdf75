"""
Exception hierarchy for the refinery package.
"""
from typing import Optional


class RefineryError(Exception):
    """Base class for every error raised by refinery."""


class FeatureFormatError(RefineryError):
    """File does not follow the FINF / FINC layout (magic, version, header)."""


class TruncatedFileError(RefineryError):
    """Payload shorter than the header declares."""


class NonFiniteError(RefineryError):
    """NaN or Inf found where only finite values are allowed."""


class ShapeError(RefineryError):
    """Dimension or sample-count mismatch."""


class LabelError(RefineryError):
    """Label manifest is inconsistent with the feature file."""


class HierarchyError(RefineryError):
    """Cluster assignments do not cover the classes they claim to split."""


class SplitError(RefineryError):
    """Invalid splitter input."""


class MetricError(RefineryError):
    """Metric undefined for the given inputs (e.g. no relevant items)."""


class DivergenceError(RefineryError):
    """Training loss became non-finite."""

    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch


class SynthError(RefineryError):
    """Synthetic generator could not satisfy its constraints."""


class ConfigError(RefineryError):
    """Invalid run configuration."""


class StageError(RefineryError):
    """A pipeline stage failed; wraps the original error."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
