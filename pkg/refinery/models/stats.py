"""
Cluster diagnostics: sizes, spreads, histograms and PCA projections.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from refinery.models.dataset import _frozen


@dataclass(frozen=True)
class Histogram:
    """Fixed-width bins starting at edges[0]; counts[i] covers [edges[i], edges[i+1])."""
    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "edges", _frozen(np.array(self.edges, dtype=np.float64, copy=True)))
        object.__setattr__(self, "counts", _frozen(np.array(self.counts, dtype=np.int64, copy=True)))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClusterStats:
    """
    Per-cluster sizes and intra-cluster variances, listed class-major.

    variance is the mean squared distance to the cluster centroid.
    """
    class_ids: np.ndarray
    sizes: np.ndarray
    variances: np.ndarray
    k_per_class: np.ndarray
    size_histogram: Histogram
    variance_histogram: Histogram

    def __post_init__(self):
        for name in ("class_ids", "sizes", "variances", "k_per_class"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), copy=True)))

    @property
    def n_clusters(self) -> int:
        return int(self.sizes.size)

    def summary(self) -> dict:
        """Balance and spread summary of the whole assignment set."""
        if self.sizes.size == 0:
            return {"n_clusters": 0}
        sizes = self.sizes.astype(np.float64)
        return {
            "n_clusters": self.n_clusters,
            "mean_size": float(sizes.mean()),
            "min_size": int(self.sizes.min()),
            "max_size": int(self.sizes.max()),
            "size_cv": float(sizes.std() / sizes.mean()),
            "mean_variance": float(self.variances.mean()),
            "mean_k": float(self.k_per_class.mean()),
        }


@dataclass(frozen=True)
class PcaProjection:
    """Samples projected on the top two principal axes."""
    projection: np.ndarray
    explained: tuple[float, float]
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "projection", _frozen(np.array(self.projection, dtype=np.float64, copy=True)))
        object.__setattr__(self, "components", _frozen(np.array(self.components, dtype=np.float64, copy=True)))
        object.__setattr__(self, "explained", tuple(float(v) for v in self.explained))
