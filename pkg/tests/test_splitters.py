"""
Per-class splitting baselines and k-means.
"""
import numpy as np
import pytest
from scipy.spatial.distance import cdist
from sklearn.metrics import adjusted_rand_score

from conftest import make_blobs, whole_view
from refinery.core.errors import SplitError
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.schemas.splitting import SplitMethod, SplitterConfig
from refinery.services.kmeans_service import kmeans_fit
from refinery.services.splitter_service import (
    affinity_propagation,
    split_affinity,
    split_dataset,
    split_kmeans,
    split_meanshift,
    split_random_k,
    split_spectral,
    split_view,
)


def _rings(per_ring: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    angles = np.linspace(0.0, 2 * np.pi, per_ring, endpoint=False)
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    points = np.vstack([circle * 1.0, circle * 5.0]) + rng.normal(0.0, 0.02, size=(2 * per_ring, 2))
    return points, np.repeat([0, 1], per_ring)


def test_kmeans_recovers_separated_blobs():
    points, truth = make_blobs([[0, 0], [10, 0], [0, 10]], 30, 0.3)
    assignment = split_kmeans(whole_view(90), FeatureMatrix(points), 3, seed=4)
    assert assignment.k == 3
    assert adjusted_rand_score(truth, assignment.member_of) == 1.0
    assert assignment.converged


def test_kmeans_inertia_never_rises():
    points = np.random.default_rng(2).standard_normal((200, 3))
    result = kmeans_fit(FeatureMatrix(points), 6, seed=1)
    history = result.inertia_history
    assert all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(history, history[1:]))
    assert result.inertia == pytest.approx(history[-1])
    assert np.bincount(result.labels, minlength=6).min() > 0


def test_kmeans_repairs_empty_clusters():
    # four distinct points, k=4: every cluster must end up non-empty
    points = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [9.0, 9.0], [9.0, 0.0]])
    result = kmeans_fit(FeatureMatrix(points), 4, seed=0)
    assert np.all(np.bincount(result.labels, minlength=4) > 0)


def test_kmeans_rejects_bad_k():
    with pytest.raises(SplitError):
        kmeans_fit(FeatureMatrix(np.zeros((3, 2))), 4, seed=0)
    with pytest.raises(SplitError):
        kmeans_fit(FeatureMatrix(np.zeros((3, 2))), 0, seed=0)


def test_single_cluster():
    points = np.random.default_rng(0).standard_normal((15, 2))
    assignment = split_kmeans(whole_view(15), FeatureMatrix(points), 1, seed=0)
    assert assignment.k == 1
    assert assignment.n_samples == 15


def test_random_split_is_balanced_and_seeded():
    view = whole_view(23)
    first = split_random_k(view, 4, seed=5)
    assert sorted(first.sizes.tolist()) == [5, 6, 6, 6]
    np.testing.assert_array_equal(first.member_of, split_random_k(view, 4, seed=5).member_of)


def test_fixed_k_larger_than_class():
    view = whole_view(3)
    with pytest.raises(SplitError):
        split_random_k(view, 5, seed=0)
    assert split_random_k(view, 5, seed=0, shrink=True).k == 3
    assert split_kmeans(view, FeatureMatrix(np.eye(3)), 5, seed=0, shrink=True).k == 3


def test_spectral_separates_concentric_rings():
    points, truth = _rings()
    assignment = split_spectral(whole_view(200), FeatureMatrix(points), 2, seed=0, n_neighbors=10)
    assert assignment.k == 2
    assert adjusted_rand_score(truth, assignment.member_of) == 1.0


def test_spectral_matches_kmeans_on_two_far_blobs():
    points, truth = make_blobs([[0, 0], [20, 0]], 25, 0.3, seed=5)
    features = FeatureMatrix(points)
    spectral = split_spectral(whole_view(50), features, 2, seed=0)
    kmeans = split_kmeans(whole_view(50), features, 2, seed=0)
    assert spectral.k == kmeans.k == 2
    assert adjusted_rand_score(kmeans.member_of, spectral.member_of) == 1.0
    assert adjusted_rand_score(truth, spectral.member_of) == 1.0


def test_affinity_propagation_finds_three_blobs():
    points, truth = make_blobs([[0, 0], [10, 0], [0, 10]], 30, 0.3, seed=2)
    assignment = split_affinity(whole_view(90), FeatureMatrix(points))
    assert assignment.k == 3
    assert adjusted_rand_score(truth, assignment.member_of) == 1.0


def test_affinity_lower_preference_gives_fewer_clusters():
    points, _ = make_blobs([[0, 0], [10, 0], [0, 10]], 30, 0.3, seed=2)
    default = split_affinity(whole_view(90), FeatureMatrix(points))
    low = split_affinity(whole_view(90), FeatureMatrix(points), preference=-1e6)
    assert low.k <= default.k


@pytest.mark.parametrize("preference", [-23462.0, -1e6])
def test_affinity_very_low_preference_collapses_to_one_exemplar(preference):
    points, _ = make_blobs([[0, 0], [10, 0], [0, 10]], 30, 0.3, seed=2)
    labels, converged = affinity_propagation(points, preference=preference)
    assert np.unique(labels).size == 1
    assert converged


def test_affinity_ten_times_min_similarity_is_not_finer_than_median():
    points, _ = make_blobs([[0, 0], [10, 0], [0, 10]], 30, 0.3, seed=2)
    min_similarity = -cdist(points, points, "sqeuclidean").max()
    default = split_affinity(whole_view(90), FeatureMatrix(points))
    low = split_affinity(whole_view(90), FeatureMatrix(points), preference=10 * min_similarity)
    assert 1 <= low.k <= default.k == 3


def test_affinity_unconverged_run_is_flagged():
    points, _ = make_blobs([[0, 0], [10, 0], [0, 10]], 30, 0.3, seed=2)
    _, converged = affinity_propagation(points, max_iters=3)
    assert not converged


def test_affinity_identical_points():
    assignment = split_affinity(whole_view(5), FeatureMatrix(np.ones((5, 2))))
    assert assignment.k == 1


def test_meanshift_finds_two_modes():
    points, truth = make_blobs([[0, 0], [6, 0]], 25, 0.05, seed=1)
    assignment = split_meanshift(whole_view(50), FeatureMatrix(points), bandwidth=1.0)
    assert assignment.k == 2
    assert adjusted_rand_score(truth, assignment.member_of) == 1.0


def test_meanshift_tiny_bandwidth_shatters_the_class():
    points, _ = make_blobs([[0, 0]], 30, 0.05, seed=1)
    assignment = split_meanshift(whole_view(30), FeatureMatrix(points), bandwidth=1e-3)
    assert assignment.k > 20


def test_meanshift_rejects_non_positive_bandwidth():
    with pytest.raises(SplitError):
        split_meanshift(whole_view(3), FeatureMatrix(np.zeros((3, 2))), bandwidth=0.0)


def test_split_dataset_covers_each_class_independently_of_threads():
    points, labels = make_blobs([[0, 0], [5, 5], [10, 0]], 20, 1.0, seed=6)
    dataset = LabeledDataset(FeatureMatrix(points), labels, 3)
    config = SplitterConfig(method=SplitMethod.KMEANS, k=3)
    serial = split_dataset(dataset, dataset.features, config, seed=8, threads=1)
    pooled = split_dataset(dataset, dataset.features, config, seed=8, threads=3)
    assert [a.class_id for a in serial] == [0, 1, 2]
    for a, b in zip(serial, pooled):
        np.testing.assert_array_equal(a.sample_indices, np.flatnonzero(labels == a.class_id))
        np.testing.assert_array_equal(a.member_of, b.member_of)
        assert a.k == 3


def test_split_view_refuses_bucbam():
    with pytest.raises(SplitError):
        split_view(whole_view(4), FeatureMatrix(np.zeros((4, 1))), SplitterConfig(method=SplitMethod.BUCBAM), 0)


def test_splitter_labels():
    assert SplitterConfig(method=SplitMethod.KMEANS, k=16).label == "kmeans-K16"
    assert SplitterConfig(method=SplitMethod.AFFINITY).label == "affinity"
    assert SplitterConfig(method=SplitMethod.MEANSHIFT, bandwidth=0.5).label == "meanshift-bw0.5"
