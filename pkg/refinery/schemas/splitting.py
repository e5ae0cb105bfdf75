"""
Pydantic schemas for splitting methods.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class SplitMethod(str, Enum):
    """Ways of building the finer level."""
    RANDOM = "random"
    KMEANS = "kmeans"
    SPECTRAL = "spectral"
    AFFINITY = "affinity"
    MEANSHIFT = "meanshift"
    BUCBAM = "bucbam"


class SplitterConfig(BaseModel):
    """Parameters of the per-class splitter."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: SplitMethod = Field(default=SplitMethod.BUCBAM)
    k: int = Field(default=16, ge=1, description="Clusters per class for fixed-K methods")
    # k-means
    max_iters: int = Field(default=300, ge=1)
    tol: float = Field(default=1e-6, gt=0.0)
    # spectral
    n_neighbors: int = Field(default=10, ge=1)
    # affinity propagation
    damping: float = Field(default=0.7, ge=0.5, lt=1.0)
    affinity_iters: int = Field(default=500, ge=1)
    preference: Optional[float] = Field(
        default=None, description="Exemplar preference; median similarity when unset"
    )
    # mean-shift
    bandwidth: float = Field(default=1.0, gt=0.0)

    @property
    def label(self) -> str:
        """Short descriptor used in reports, e.g. 'kmeans-K16'."""
        if self.method in (SplitMethod.RANDOM, SplitMethod.KMEANS, SplitMethod.SPECTRAL):
            return f"{self.method.value}-K{self.k}"
        if self.method is SplitMethod.MEANSHIFT:
            return f"meanshift-bw{self.bandwidth:g}"
        return self.method.value
