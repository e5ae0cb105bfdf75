"""
Linear models: binary logistic/hinge classifiers trained by full-batch
gradient descent, one-versus-all ensembles and the 1-NN lookup.
"""
import logging
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from refinery.core.errors import DivergenceError, ShapeError
from refinery.core.parallel import parallel_map
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.linear import BinaryLinearModel, LossKind, OvaModel
from refinery.schemas.training import LinearProbeConfig

logger = logging.getLogger(__name__)


def binary_objective(w, b, x, y, loss_kind: LossKind = LossKind.LOGISTIC, l2: float = 1e-3) -> float:
    """Mean loss over samples plus (l2 / 2) * ||w||^2; y holds 0/1 targets."""
    w = np.asarray(w, dtype=np.float64)
    signs = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    margins = signs * (np.asarray(x, dtype=np.float64) @ w + b)
    if LossKind(loss_kind) is LossKind.LOGISTIC:
        data = float(np.mean(np.logaddexp(0.0, -margins)))
    else:
        data = float(np.mean(np.maximum(0.0, 1.0 - margins)))
    return data + 0.5 * l2 * float(w @ w)


def binary_gradient(w, b, x, y, loss_kind: LossKind = LossKind.LOGISTIC, l2: float = 1e-3):
    """(grad_w, grad_b) of binary_objective; a subgradient for hinge."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    signs = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    margins = signs * (x @ w + b)
    if LossKind(loss_kind) is LossKind.LOGISTIC:
        dz = -signs * expit(-margins)
    else:
        dz = -signs * (margins < 1.0)
    dz /= signs.size
    return x.T @ dz + l2 * w, float(dz.sum())


def train_binary(
    positives: FeatureMatrix,
    negatives: FeatureMatrix,
    loss_kind: LossKind = LossKind.LOGISTIC,
    l2: float = 1e-3,
    iters: int = 500,
    lr: float = 0.1,
    standardize: bool = True,
) -> BinaryLinearModel:
    """
    Deterministic full-batch gradient descent from w = 0, b = 0.

    With standardize, features are centered and scaled per dimension for the
    descent and the result is folded back so the model scores raw features.
    The step is lr divided by the objective's smoothness bound when that bound
    exceeds one. Hinge descent keeps the best iterate seen.
    """
    if positives.n_samples == 0 or negatives.n_samples == 0:
        raise ShapeError("binary training needs non-empty positive and negative sets")
    if positives.dim != negatives.dim:
        raise ShapeError(f"positive dim {positives.dim} != negative dim {negatives.dim}")
    loss_kind = LossKind(loss_kind)

    x = np.vstack([positives.values, negatives.values])
    y = np.concatenate([np.ones(positives.n_samples), np.zeros(negatives.n_samples)])
    mean = np.zeros(x.shape[1])
    scale = np.ones(x.shape[1])
    if standardize:
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale < 1e-12] = 1.0
        x = (x - mean) / scale

    augmented = np.hstack([x, np.ones((x.shape[0], 1))])
    smoothness = max(np.linalg.norm(augmented, 2) ** 2 / x.shape[0], 1.0) / 4.0 + l2
    step = lr / max(1.0, smoothness)

    w = np.zeros(x.shape[1])
    b = 0.0
    objective = binary_objective(w, b, x, y, loss_kind, l2)
    history = [objective]
    best = (objective, w.copy(), b)
    for it in range(1, iters + 1):
        grad_w, grad_b = binary_gradient(w, b, x, y, loss_kind, l2)
        w = w - step * grad_w
        b = b - step * grad_b
        objective = binary_objective(w, b, x, y, loss_kind, l2)
        if not np.isfinite(objective):
            raise DivergenceError(f"linear training diverged at iteration {it}", epoch=it)
        history.append(objective)
        if objective < best[0]:
            best = (objective, w.copy(), b)

    if loss_kind is LossKind.HINGE:
        _, w, b = best
    w_raw = w / scale
    b_raw = b - float(w_raw @ mean)
    return BinaryLinearModel(w=w_raw, b=b_raw, loss_kind=loss_kind, l2=l2, objective_history=tuple(history))


def score(model: BinaryLinearModel, features: FeatureMatrix) -> np.ndarray:
    """Sigmoid scores for logistic models, raw margins for hinge."""
    if features.dim != model.dim:
        raise ShapeError(f"model expects dim {model.dim}, features have dim {features.dim}")
    margins = features.values @ model.w + model.b
    if model.loss_kind is LossKind.LOGISTIC:
        return expit(margins)
    return margins


def train_ova(
    dataset: LabeledDataset,
    loss_kind: LossKind = LossKind.HINGE,
    l2: float = 1e-3,
    iters: int = 500,
    lr: float = 0.1,
    standardize: bool = True,
    relevance: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> OvaModel:
    """
    One binary model per class: that class against all other samples.

    relevance (n_samples x classes, boolean) replaces the single labels for
    multi-label tasks.
    """
    if dataset.class_count < 2:
        raise ShapeError("one-versus-all needs at least 2 classes")
    if relevance is None:
        relevance = dataset.labels[:, None] == np.arange(dataset.class_count)[None, :]
    relevance = np.asarray(relevance, dtype=bool)
    x = dataset.features

    def fit(c: int) -> BinaryLinearModel:
        mask = relevance[:, c]
        return train_binary(x.rows(np.flatnonzero(mask)), x.rows(np.flatnonzero(~mask)),
                            loss_kind, l2, iters, lr, standardize)

    models = parallel_map(fit, range(dataset.class_count), threads)
    return OvaModel(tuple(models))


def train_ova_with(dataset: LabeledDataset, config: LinearProbeConfig, **kwargs) -> OvaModel:
    return train_ova(dataset, config.loss_kind, config.l2, config.iters, config.lr, config.standardize, **kwargs)


def decision_function(model: OvaModel, features: FeatureMatrix) -> np.ndarray:
    """Per-class scores, n_samples x classes."""
    return np.stack([score(m, features) for m in model.models], axis=1)


def predict(model: OvaModel, features: FeatureMatrix) -> np.ndarray:
    """Argmax of the per-class scores; ties go to the lowest class index."""
    return np.argmax(decision_function(model, features), axis=1)


def nearest_neighbor(query, pool: FeatureMatrix) -> int:
    """Index of the Euclidean-closest pool row; ties go to the lowest index."""
    if pool.n_samples == 0:
        raise ShapeError("nearest_neighbor needs a non-empty pool")
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.size != pool.dim:
        raise ShapeError(f"query dim {query.size} != pool dim {pool.dim}")
    return int(np.argmin(np.sum((pool.values - query) ** 2, axis=1)))


def nearest_neighbors(queries: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Row-wise nearest_neighbor for a batch of queries."""
    return np.argmin(cdist(queries, pool, "sqeuclidean"), axis=1)
