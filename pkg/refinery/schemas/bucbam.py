"""
Pydantic schema for the split / prune / merge refinement.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class MergeMode(str, Enum):
    """Merge rule over the classifier cross-scores."""
    SS = "ss"   # both cross-scores above S_H
    AS = "as"   # one above S_H, the other above S_M


class PruneStrategy(str, Enum):
    """How clusters smaller than S are dissolved."""
    ONE_SHOT = "one_shot"     # orphans join their 1-NN among the large clusters
    ITERATIVE = "iterative"   # smallest-first absorption until every cluster reaches S


class InitialSplitter(str, Enum):
    """Over-splitting step."""
    KMEANS = "kmeans"
    RANDOM = "random"


class BucbamConfig(BaseModel):
    """Defaults: K=32, S=15, S_H=0.8, S_M=S_H/2."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_initial: int = Field(default=32, ge=2, description="Over-split size K")
    min_cluster_size: int = Field(default=15, ge=1, description="Pruning floor S")
    s_high: float = Field(default=0.8, gt=0.0, le=1.0, description="High score S_H")
    s_med: Optional[float] = Field(default=None, description="Medium score S_M (default S_H/2)")
    merge_mode: MergeMode = Field(default=MergeMode.SS)
    prune_strategy: PruneStrategy = Field(default=PruneStrategy.ITERATIVE)
    initial_splitter: InitialSplitter = Field(default=InitialSplitter.KMEANS)
    negatives_per_positive: float = Field(default=1.0, gt=0.0)
    seed: int = Field(default=0)

    # cluster classifiers: logistic, run to convergence on standardized features
    classifier_l2: float = Field(default=0.05, ge=0.0)
    classifier_iters: int = Field(default=1000, ge=1)
    classifier_lr: float = Field(default=1.0, gt=0.0)

    @property
    def s_medium(self) -> float:
        """Effective S_M."""
        return self.s_high / 2.0 if self.s_med is None else self.s_med

    @model_validator(mode="after")
    def validate_thresholds(self) -> "BucbamConfig":
        """Enforce 0 < S_M < S_H."""
        if not 0.0 < self.s_medium < self.s_high:
            raise ValueError(
                f"need 0 < s_med < s_high, got s_med={self.s_medium}, s_high={self.s_high}"
            )
        return self

    @property
    def label(self) -> str:
        return f"bucbam-{self.merge_mode.value}"
