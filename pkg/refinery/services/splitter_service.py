"""
Per-class splitting baselines: Random-K, K-means-K, Spectral-K,
Affinity Propagation and Mean-Shift.
"""
import logging
from typing import Optional

import numpy as np
from scipy.linalg import eigh
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist, pdist, squareform

from refinery.core.errors import ShapeError, SplitError
from refinery.core.parallel import derive_int, derive_rng, parallel_map
from refinery.models.clustering import ClusterAssignment, compact_labels
from refinery.models.dataset import ClassView, FeatureMatrix, LabeledDataset, class_views
from refinery.schemas.splitting import SplitMethod, SplitterConfig
from refinery.services.kmeans_service import kmeans_fit

logger = logging.getLogger(__name__)


def _check_view(view: ClassView, features: Optional[FeatureMatrix] = None) -> None:
    if features is not None and features.n_samples != view.size:
        raise ShapeError(f"class {view.class_id}: {features.n_samples} feature rows for {view.size} samples")


def _effective_k(view: ClassView, k: int, shrink: bool) -> int:
    if k < 1:
        raise SplitError(f"k must be >= 1, got {k}")
    if k > view.size:
        if not shrink:
            raise SplitError(f"class {view.class_id}: k={k} exceeds its {view.size} samples")
        logger.warning("class %d: k=%d shrunk to N_i=%d", view.class_id, k, view.size)
        return view.size
    return k


def split_random_k(view: ClassView, k: int, seed: int, shrink: bool = False) -> ClusterAssignment:
    """Balanced shuffle-partition: cluster sizes differ by at most one."""
    k = _effective_k(view, k, shrink)
    order = derive_rng(seed).permutation(view.size)
    member_of = np.empty(view.size, dtype=np.int64)
    member_of[order] = np.arange(view.size) % k
    return ClusterAssignment(view.class_id, view.sample_indices, member_of)


def split_kmeans(
    view: ClassView,
    features: FeatureMatrix,
    k: int,
    seed: int,
    max_iters: int = 300,
    tol: float = 1e-6,
    shrink: bool = False,
) -> ClusterAssignment:
    """Nearest-centroid labeling of a k-means fit."""
    _check_view(view, features)
    k = _effective_k(view, k, shrink)
    result = kmeans_fit(features, k, seed, max_iters=max_iters, tol=tol)
    converged = result.n_iter < max_iters
    return ClusterAssignment(view.class_id, view.sample_indices, result.labels, converged)


def _knn_rbf_graph(x: np.ndarray, n_neighbors: int) -> np.ndarray:
    """Max-symmetrized RBF weights on the k-NN graph, bandwidth = median pairwise distance."""
    n = x.shape[0]
    pairwise = pdist(x)
    sigma = float(np.median(pairwise)) if pairwise.size else 1.0
    if sigma <= 0:
        sigma = 1.0
    distances = squareform(pairwise)
    np.fill_diagonal(distances, np.inf)
    neighbors = np.argsort(distances, axis=1, kind="stable")[:, :min(n_neighbors, n - 1)]
    weights = np.zeros((n, n))
    rows = np.repeat(np.arange(n), neighbors.shape[1])
    cols = neighbors.reshape(-1)
    weights[rows, cols] = np.exp(-distances[rows, cols] ** 2 / (2 * sigma ** 2))
    return np.maximum(weights, weights.T)


def spectral_embedding(x: np.ndarray, k: int, n_neighbors: int = 10, class_id: int = -1) -> np.ndarray:
    """Row-normalized bottom-k eigenvectors of the symmetric normalized Laplacian."""
    weights = _knn_rbf_graph(x, n_neighbors)
    n_components, _ = connected_components(csr_matrix(weights > 0), directed=False)
    if n_components > k:
        logger.warning("class %d: similarity graph has %d components for k=%d", class_id, n_components, k)

    degree = weights.sum(axis=1)
    inv_sqrt = np.zeros_like(degree)
    inv_sqrt[degree > 0] = 1.0 / np.sqrt(degree[degree > 0])
    laplacian = np.eye(x.shape[0]) - inv_sqrt[:, None] * weights * inv_sqrt[None, :]
    _, vectors = eigh(laplacian, subset_by_index=[0, k - 1])

    # sign convention: largest-magnitude entry of each eigenvector is positive
    pivots = np.argmax(np.abs(vectors), axis=0)
    vectors *= np.where(vectors[pivots, np.arange(k)] < 0, -1.0, 1.0)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


def split_spectral(
    view: ClassView,
    features: FeatureMatrix,
    k: int,
    seed: int,
    n_neighbors: int = 10,
    max_iters: int = 300,
    tol: float = 1e-6,
    shrink: bool = False,
) -> ClusterAssignment:
    """k-means on the spectral embedding of the class's k-NN graph."""
    _check_view(view, features)
    k = _effective_k(view, k, shrink)
    if k == 1:
        return ClusterAssignment.single(view.class_id, view.sample_indices)
    embedding = spectral_embedding(features.values, k, n_neighbors, view.class_id)
    result = kmeans_fit(FeatureMatrix(embedding), k, seed, max_iters=max_iters, tol=tol)
    return ClusterAssignment(view.class_id, view.sample_indices, result.labels, result.n_iter < max_iters)


def affinity_propagation(
    x: np.ndarray,
    damping: float = 0.7,
    max_iters: int = 500,
    preference: Optional[float] = None,
    seed: int = 0,
    convergence_iters: int = 15,
) -> tuple[np.ndarray, bool]:
    """
    Responsibility / availability message passing.

    Similarity is the negative squared Euclidean distance; returns
    (labels numbered by first appearance, converged flag).
    """
    n = x.shape[0]
    distances = cdist(x, x, "sqeuclidean")
    if np.all(distances == 0):
        return np.zeros(n, dtype=np.int64), True
    similarity = -distances
    off_diagonal = similarity[~np.eye(n, dtype=bool)]
    preference = float(np.median(off_diagonal)) if preference is None else float(preference)
    medoid_cost = float(distances.sum(axis=0).min())
    # an extra exemplar saves at most the one-medoid cost; below it one exemplar is optimal
    if -preference >= medoid_cost:
        logger.debug("preference %.4g below one-medoid cost %.4g: single exemplar", preference, medoid_cost)
        return np.zeros(n, dtype=np.int64), True
    similarity.flat[::n + 1] = preference

    # tiny seeded noise breaks exact ties between candidate exemplars
    rng = derive_rng(seed)
    tiny = np.finfo(np.float64)
    similarity += (tiny.eps * similarity + tiny.tiny * 100) * rng.standard_normal((n, n))

    rows = np.arange(n)
    resp = np.zeros((n, n))
    avail = np.zeros((n, n))
    stable = 0
    previous = None
    converged = False
    for it in range(1, max_iters + 1):
        combined = avail + similarity
        best = np.argmax(combined, axis=1)
        first = combined[rows, best]
        combined[rows, best] = -np.inf
        second = np.max(combined, axis=1)
        update = similarity - first[:, None]
        update[rows, best] = similarity[rows, best] - second
        resp = damping * resp + (1 - damping) * update

        positive = np.maximum(resp, 0)
        positive.flat[::n + 1] = resp.flat[::n + 1]
        update = positive.sum(axis=0)[None, :] - positive
        self_avail = update.flat[::n + 1].copy()
        update = np.minimum(update, 0)
        update.flat[::n + 1] = self_avail
        avail = damping * avail + (1 - damping) * update

        exemplars = (np.diag(avail) + np.diag(resp)) > 0
        if previous is not None and np.array_equal(exemplars, previous) and exemplars.any():
            stable += 1
        else:
            stable = 0
        previous = exemplars
        if stable >= convergence_iters:
            converged = True
            logger.debug("affinity propagation converged after %d iterations", it)
            break

    centers = np.flatnonzero(np.diag(avail) + np.diag(resp) > 0)
    if centers.size == 0:
        return np.zeros(n, dtype=np.int64), False
    labels = np.argmin(distances[:, centers], axis=1)
    labels[centers] = np.arange(centers.size)
    # net similarity of the exemplar set against the best single exemplar
    net = preference * centers.size - distances[rows, centers[labels]].sum()
    if net < preference - medoid_cost:
        logger.debug("%d exemplars score below the one-medoid solution", centers.size)
        return np.zeros(n, dtype=np.int64), converged
    return compact_labels(labels), converged


def split_affinity(
    view: ClassView,
    features: FeatureMatrix,
    damping: float = 0.7,
    max_iters: int = 500,
    preference: Optional[float] = None,
    seed: int = 0,
) -> ClusterAssignment:
    """K_i emerges from the number of exemplars."""
    _check_view(view, features)
    if view.size < 2:
        raise SplitError(f"class {view.class_id}: affinity propagation needs at least 2 samples")
    labels, converged = affinity_propagation(features.values, damping, max_iters, preference, seed)
    if not converged:
        logger.warning("class %d: affinity propagation did not converge in %d iterations",
                       view.class_id, max_iters)
    return ClusterAssignment(view.class_id, view.sample_indices, labels, converged)


def mean_shift_modes(x: np.ndarray, bandwidth: float, max_iters: int = 300) -> tuple[np.ndarray, np.ndarray]:
    """Flat-kernel mean-shift from every point; returns (modes, support counts)."""
    modes = x.copy()
    for _ in range(max_iters):
        window = cdist(modes, x) <= bandwidth
        counts = window.sum(axis=1)
        shifted = np.where(counts[:, None] > 0, window @ x / np.maximum(counts, 1)[:, None], modes)
        moved = np.linalg.norm(shifted - modes, axis=1)
        modes = shifted
        if moved.max() < 1e-3 * bandwidth:
            break
    support = (cdist(modes, x) <= bandwidth).sum(axis=1)
    return modes, support


def split_meanshift(
    view: ClassView,
    features: FeatureMatrix,
    bandwidth: float,
    max_iters: int = 300,
) -> ClusterAssignment:
    """Modes within bandwidth/2 of a better-supported mode are merged into it."""
    _check_view(view, features)
    if bandwidth <= 0:
        raise SplitError(f"bandwidth must be > 0, got {bandwidth}")
    x = features.values
    modes, support = mean_shift_modes(x, bandwidth, max_iters)

    kept: list[int] = []
    for i in np.argsort(-support, kind="stable"):
        if not kept or np.min(np.linalg.norm(modes[kept] - modes[i], axis=1)) > bandwidth / 2:
            kept.append(int(i))
    labels = np.argmin(cdist(x, modes[kept], "sqeuclidean"), axis=1)
    return ClusterAssignment(view.class_id, view.sample_indices, compact_labels(labels))


def split_view(
    view: ClassView,
    features: FeatureMatrix,
    config: SplitterConfig,
    seed: int,
) -> ClusterAssignment:
    """Dispatch one class to the configured baseline; fixed-K methods shrink k to N_i."""
    method = config.method
    if method is SplitMethod.RANDOM:
        return split_random_k(view, config.k, seed, shrink=True)
    if method is SplitMethod.KMEANS:
        return split_kmeans(view, features, config.k, seed, config.max_iters, config.tol, shrink=True)
    if method is SplitMethod.SPECTRAL:
        return split_spectral(view, features, config.k, seed, config.n_neighbors,
                              config.max_iters, config.tol, shrink=True)
    if method is SplitMethod.AFFINITY:
        if view.size < 2:
            return ClusterAssignment.single(view.class_id, view.sample_indices)
        return split_affinity(view, features, config.damping, config.affinity_iters, config.preference, seed)
    if method is SplitMethod.MEANSHIFT:
        return split_meanshift(view, features, config.bandwidth, config.max_iters)
    raise SplitError(f"{method.value} is not a per-class baseline splitter")


def split_dataset(
    dataset: LabeledDataset,
    representation: FeatureMatrix,
    config: SplitterConfig,
    seed: int,
    threads: Optional[int] = None,
) -> list[ClusterAssignment]:
    """
    Split every specific class of dataset on the given representation.

    Classes run in the worker pool; class i draws from the stream (seed, i).
    """
    if representation.n_samples != dataset.n_samples:
        raise ShapeError(f"representation has {representation.n_samples} rows, dataset has {dataset.n_samples}")

    def run(view: ClassView) -> ClusterAssignment:
        return split_view(view, representation.rows(view.sample_indices), config,
                          derive_int(seed, view.class_id))

    assignments = parallel_map(run, class_views(dataset), threads)
    logger.info("%s split: %d classes -> %d finer classes",
                config.label, len(assignments), sum(a.k for a in assignments))
    return assignments
