"""
Lloyd's k-means with k-means++ seeding and empty-cluster repair.
"""
import logging

import numpy as np
from scipy.spatial.distance import cdist

from refinery.core.errors import SplitError
from refinery.core.parallel import derive_rng
from refinery.models.clustering import KMeansResult
from refinery.models.dataset import FeatureMatrix

logger = logging.getLogger(__name__)


def kmeans_plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding; falls back to a uniform pick when every point is already a center."""
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = cdist(x, centroids[:1], "sqeuclidean")[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            pick = rng.choice(n, p=closest / total)
        else:
            pick = rng.integers(n)
        centroids[j] = x[pick]
        closest = np.minimum(closest, cdist(x, centroids[j:j + 1], "sqeuclidean")[:, 0])
    return centroids


def _assign(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    distances = cdist(x, centroids, "sqeuclidean")
    return np.argmin(distances, axis=1), distances


def _repair(x: np.ndarray, centroids: np.ndarray, labels: np.ndarray, distances: np.ndarray) -> int:
    """
    Reseed every empty cluster at the point farthest from its centroid.

    Works in place on centroids and labels; returns the number of reseeds.
    """
    k = centroids.shape[0]
    repairs = 0
    for j in range(k):
        sizes = np.bincount(labels, minlength=k)
        if sizes[j] > 0:
            continue
        own = distances[np.arange(labels.size), labels]
        own = np.where(sizes[labels] > 1, own, -np.inf)
        point = int(np.argmax(own))
        centroids[j] = x[point]
        distances[:, j] = np.sum((x - centroids[j]) ** 2, axis=1)
        labels[:] = np.argmin(distances, axis=1)
        if not np.any(labels == j):
            labels[point] = j
        repairs += 1
    return repairs


def kmeans_fit(
    points: FeatureMatrix,
    k: int,
    seed: int,
    max_iters: int = 300,
    tol: float = 1e-6,
) -> KMeansResult:
    """
    Hard k-means on the rows of points.

    Stops when no centroid moves by tol or more, or after max_iters updates.
    Every returned cluster is non-empty; the inertia trace is recorded after
    each assignment step.
    """
    x = points.values
    n = x.shape[0]
    if not 1 <= k <= n:
        raise SplitError(f"k-means needs 1 <= k <= n_samples, got k={k}, n={n}")

    rng = derive_rng(seed)
    centroids = kmeans_plusplus(x, k, rng)
    labels, distances = _assign(x, centroids)
    repairs = _repair(x, centroids, labels, distances)
    inertia = float(np.sum((x - centroids[labels]) ** 2))
    history = [inertia]

    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        updated = np.stack([x[labels == j].mean(axis=0) for j in range(k)])
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        labels, distances = _assign(x, centroids)
        repairs += _repair(x, centroids, labels, distances)
        inertia = float(np.sum((x - centroids[labels]) ** 2))
        if inertia > history[-1] * (1 + 1e-9) + 1e-12:
            logger.warning("k-means inertia rose from %.12g to %.12g at iteration %d",
                           history[-1], inertia, n_iter)
        history.append(inertia)
        logger.debug("k-means iter %d inertia %.6g shift %.3g", n_iter, inertia, shift)
        if shift < tol:
            break

    return KMeansResult(
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        n_iter=n_iter,
        inertia_history=tuple(history),
        repairs=repairs,
    )
