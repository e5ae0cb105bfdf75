"""
Cluster diagnostics: size and spread histograms, per-class PCA projections
and their plot-ready CSV export.
"""
import logging
import math
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh

from refinery.core.errors import ShapeError
from refinery.models.clustering import ClusterAssignment
from refinery.models.dataset import FeatureMatrix
from refinery.models.stats import ClusterStats, Histogram, PcaProjection
from refinery.repositories.report_repository import save_json, save_table

logger = logging.getLogger(__name__)

SIZE_BIN = 10
VARIANCE_BIN = 0.05


def fixed_width_histogram(values: np.ndarray, width: float, n_bins: Optional[int] = None) -> Histogram:
    """Bins [i*w, (i+1)*w) from 0; values beyond the last bin land in it."""
    index = np.floor(np.asarray(values, dtype=np.float64) / width).astype(np.int64)
    if n_bins is None:
        n_bins = int(index.max()) + 1 if index.size else 1
    index = np.minimum(index, n_bins - 1)
    edges = np.arange(n_bins + 1) * width
    return Histogram(edges=edges, counts=np.bincount(index, minlength=n_bins))


def compute_cluster_stats(
    assignments: Sequence[ClusterAssignment],
    features: FeatureMatrix,
    size_bin: int = SIZE_BIN,
    variance_bin: float = VARIANCE_BIN,
) -> ClusterStats:
    """Sizes, mean squared distance to centroid, and both histograms."""
    class_ids, sizes, variances, k_per_class = [], [], [], []
    for assignment in sorted(assignments, key=lambda a: a.class_id):
        x = features.values[assignment.sample_indices]
        k_per_class.append(assignment.k)
        for cluster in range(assignment.k):
            members = x[assignment.member_of == cluster]
            class_ids.append(assignment.class_id)
            sizes.append(members.shape[0])
            variances.append(float(np.mean(np.sum((members - members.mean(axis=0)) ** 2, axis=1))))

    sizes_arr = np.array(sizes, dtype=np.int64)
    variances_arr = np.array(variances, dtype=np.float64)
    peak = variances_arr.max() if variances_arr.size else 0.0
    normalized = variances_arr / peak if peak > 0 else np.zeros_like(variances_arr)
    return ClusterStats(
        class_ids=np.array(class_ids, dtype=np.int64),
        sizes=sizes_arr,
        variances=variances_arr,
        k_per_class=np.array(k_per_class, dtype=np.int64),
        size_histogram=fixed_width_histogram(sizes_arr, size_bin),
        variance_histogram=fixed_width_histogram(normalized, variance_bin, max(1, math.ceil(1.0 / variance_bin - 1e-9))),
    )


def pca_top2(features: FeatureMatrix) -> PcaProjection:
    """
    Centered projection on the two leading eigenvectors of the sample
    covariance (N-1 denominator). Each axis is signed so that its
    largest-magnitude entry is positive.
    """
    if features.n_samples < 3 or features.dim < 2:
        raise ShapeError(f"PCA needs at least 3 samples of dim >= 2, got {features.values.shape}")
    centered = features.values - features.values.mean(axis=0)
    covariance = centered.T @ centered / (features.n_samples - 1)
    if np.max(np.abs(covariance)) <= np.finfo(np.float64).tiny:
        logger.warning("PCA on rank-0 data: projection is all zeros")
        return PcaProjection(np.zeros((features.n_samples, 2)), (0.0, 0.0), np.zeros((features.dim, 2)))

    d = features.dim
    values, vectors = eigh(covariance, subset_by_index=[d - 2, d - 1])
    values, vectors = values[::-1], vectors[:, ::-1]
    pivots = np.argmax(np.abs(vectors), axis=0)
    vectors = vectors * np.where(vectors[pivots, [0, 1]] < 0, -1.0, 1.0)
    explained = np.maximum(values, 0.0)
    return PcaProjection(centered @ vectors, (explained[0], explained[1]), vectors)


def class_projections(
    assignments: Sequence[ClusterAssignment],
    features: FeatureMatrix,
) -> dict[int, tuple[PcaProjection, np.ndarray]]:
    """PCA projection and cluster ids of every class large enough to project."""
    projections = {}
    for assignment in assignments:
        rows = features.rows(assignment.sample_indices)
        if rows.n_samples < 3 or rows.dim < 2:
            logger.debug("class %d: too small for a PCA projection", assignment.class_id)
            continue
        projections[assignment.class_id] = (pca_top2(rows), assignment.member_of)
    return projections


def export_stats(
    stats: ClusterStats,
    projections: Mapping[int, tuple[PcaProjection, np.ndarray]],
    out_dir: Union[str, Path],
) -> list[Path]:
    """
    sizes.csv and variance_hist.csv histograms, pca_class_<id>.csv per class
    (pc1, pc2, cluster_id) and a summary.json.
    """
    out_dir = Path(out_dir)
    written = [
        save_table(
            out_dir / "sizes.csv",
            ("bin_start", "bin_end", "count"),
            _histogram_rows(stats.size_histogram),
            comments=("cluster sizes in samples",),
        ),
        save_table(
            out_dir / "variance_hist.csv",
            ("bin_start", "bin_end", "count"),
            _histogram_rows(stats.variance_histogram),
            comments=("intra-cluster variance divided by the largest cluster variance",),
        ),
    ]
    for class_id in sorted(projections):
        projection, clusters = projections[class_id]
        rows = ((float(p[0]), float(p[1]), int(c)) for p, c in zip(projection.projection, clusters))
        written.append(save_table(
            out_dir / f"pca_class_{class_id}.csv",
            ("pc1", "pc2", "cluster_id"),
            rows,
            comments=(
                "covariance uses the unbiased N-1 denominator",
                f"explained variance: {projection.explained[0]!r} {projection.explained[1]!r}",
            ),
        ))
    written.append(save_json(stats.summary(), out_dir / "summary.json"))
    return written


def _histogram_rows(histogram: Histogram):
    for start, end, count in zip(histogram.edges[:-1], histogram.edges[1:], histogram.counts):
        yield float(start), float(end), int(count)
