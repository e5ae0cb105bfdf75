"""
Histograms, cluster spreads and PCA projections.
"""
import json

import numpy as np
import pytest

from refinery.core.errors import ShapeError
from refinery.models.clustering import ClusterAssignment
from refinery.models.dataset import FeatureMatrix
from refinery.services.stats_service import (
    class_projections,
    compute_cluster_stats,
    export_stats,
    fixed_width_histogram,
    pca_top2,
)


def test_fixed_width_histogram():
    histogram = fixed_width_histogram(np.array([0, 9, 10, 25]), 10)
    np.testing.assert_array_equal(histogram.counts, [2, 1, 1])
    np.testing.assert_array_equal(histogram.edges, [0, 10, 20, 30])
    assert histogram.total == 4


def test_histogram_clamps_into_last_bin():
    histogram = fixed_width_histogram(np.array([0.5, 1.0, 1.2]), 0.5, n_bins=2)
    np.testing.assert_array_equal(histogram.counts, [0, 3])


def test_cluster_variance_is_mean_squared_distance():
    features = FeatureMatrix([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0], [5.0, 5.0], [5.0, 5.0]])
    assignments = [
        ClusterAssignment(1, [2, 3, 4], [0, 0, 0]),
        ClusterAssignment(0, [0, 1], [0, 0]),
    ]
    stats = compute_cluster_stats(assignments, features)
    np.testing.assert_array_equal(stats.class_ids, [0, 1])
    np.testing.assert_array_equal(stats.sizes, [2, 3])
    np.testing.assert_allclose(stats.variances, [1.0, 0.0])
    # normalized variances 1.0 and 0.0 fall in the last and first bins
    assert stats.variance_histogram.counts[0] == 1
    assert stats.variance_histogram.counts[-1] == 1
    summary = stats.summary()
    assert summary["n_clusters"] == 2
    assert summary["mean_k"] == 1.0


@pytest.mark.parametrize("variance_bin, n_bins", [(0.05, 20), (0.3, 4), (0.4, 3), (0.7, 2)])
def test_variance_histogram_bins_cover_the_unit_interval(variance_bin, n_bins):
    features = FeatureMatrix([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0], [5.0, 5.0], [9.0, 0.0], [9.0, 0.9]])
    assignments = [
        ClusterAssignment(0, [0, 1], [0, 0]),
        ClusterAssignment(1, [2, 3], [0, 0]),
        ClusterAssignment(2, [4, 5], [0, 0]),
    ]
    histogram = compute_cluster_stats(assignments, features, variance_bin=variance_bin).variance_histogram
    assert histogram.counts.size == n_bins
    assert histogram.edges[-1] >= 1.0 - 1e-9
    # normalized variances 1.0, 0.0 and 0.2025
    assert histogram.counts[-1] >= 1
    assert histogram.counts[int(0.2025 // variance_bin)] >= 1


def test_pca_reconstructs_rank_two_data(rng):
    basis, _ = np.linalg.qr(rng.standard_normal((5, 2)))
    coords = rng.standard_normal((40, 2)) * [3.0, 1.0]
    features = FeatureMatrix(coords @ basis.T + 7.0)
    pca = pca_top2(features)
    centered = features.values - features.values.mean(axis=0)
    np.testing.assert_allclose(pca.projection @ pca.components.T, centered, atol=1e-9)
    assert pca.explained[0] >= pca.explained[1] > 0
    np.testing.assert_allclose(pca.projection.var(axis=0, ddof=1), pca.explained, rtol=1e-9)


def test_pca_sign_convention(rng):
    pca = pca_top2(FeatureMatrix(rng.standard_normal((30, 4))))
    for axis in range(2):
        column = pca.components[:, axis]
        assert column[np.argmax(np.abs(column))] > 0


def test_pca_needs_three_samples():
    with pytest.raises(ShapeError):
        pca_top2(FeatureMatrix(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        pca_top2(FeatureMatrix(np.ones((5, 1))))


def test_export_stats_files(tmp_path, rng):
    features = FeatureMatrix(rng.standard_normal((12, 3)))
    assignments = [
        ClusterAssignment(0, np.arange(10), np.repeat([0, 1], 5)),
        ClusterAssignment(1, [10, 11], [0, 0]),
    ]
    stats = compute_cluster_stats(assignments, features)
    projections = class_projections(assignments, features)
    assert list(projections) == [0]
    written = export_stats(stats, projections, tmp_path)
    assert sorted(p.name for p in written) == ["pca_class_0.csv", "sizes.csv", "summary.json", "variance_hist.csv"]

    lines = [line for line in (tmp_path / "pca_class_0.csv").read_text().splitlines() if not line.startswith("#")]
    assert lines[0] == "pc1,pc2,cluster_id"
    assert len(lines) == 11
    assert json.loads((tmp_path / "summary.json").read_text())["n_clusters"] == 3
