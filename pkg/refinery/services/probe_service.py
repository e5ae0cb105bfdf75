"""
Probe network: softmax cross-entropy training by SGD with momentum, feature
extraction from the hidden layer, and a finite-difference gradient check.
"""
import logging
from typing import Callable, Optional

import numpy as np
from scipy.special import log_softmax

from refinery.core.errors import DivergenceError, LabelError, ShapeError
from refinery.core.parallel import derive_rng
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.probe import PARAMETER_NAMES, ProbeModel
from refinery.schemas.training import TrainConfig

logger = logging.getLogger(__name__)

# Stream keys under the training seed
_INIT_STREAM = 0
_SHUFFLE_STREAM = 1

Gradients = Callable[..., tuple[float, dict[str, np.ndarray]]]


def _forward(params: dict[str, np.ndarray], x: np.ndarray):
    pre = x @ params["w1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params["w2"] + params["b2"]
    return pre, hidden, logits


def _loss(params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray, weight_decay: float) -> float:
    _, _, logits = _forward(params, x)
    log_p = log_softmax(logits, axis=1)
    data = -float(np.mean(log_p[np.arange(y.size), y]))
    decay = 0.5 * weight_decay * float(np.sum(params["w1"] ** 2) + np.sum(params["w2"] ** 2))
    return data + decay


def _loss_and_gradients(params, x, y, weight_decay):
    n = y.size
    pre, hidden, logits = _forward(params, x)
    log_p = log_softmax(logits, axis=1)
    loss = -float(np.mean(log_p[np.arange(n), y]))
    loss += 0.5 * weight_decay * float(np.sum(params["w1"] ** 2) + np.sum(params["w2"] ** 2))

    delta = np.exp(log_p)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_hidden = (delta @ params["w2"].T) * (pre > 0)
    grads = {
        "w1": x.T @ grad_hidden + weight_decay * params["w1"],
        "b1": grad_hidden.sum(axis=0),
        "w2": hidden.T @ delta + weight_decay * params["w2"],
        "b2": delta.sum(axis=0),
    }
    return loss, grads


def loss_and_gradients(
    model: ProbeModel,
    x: np.ndarray,
    y: np.ndarray,
    weight_decay: float = 0.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy (+ L2 on weights) and its analytic gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    return _loss_and_gradients(model.parameters(), x, y, weight_decay)


def init_probe(input_dim: int, hidden_dim: int, class_count: int, seed: int) -> ProbeModel:
    """Glorot-uniform weights, zero biases."""
    rng = derive_rng(seed, _INIT_STREAM)
    a1 = np.sqrt(6.0 / (input_dim + hidden_dim))
    a2 = np.sqrt(6.0 / (hidden_dim + class_count))
    return ProbeModel(
        w1=rng.uniform(-a1, a1, size=(input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-a2, a2, size=(hidden_dim, class_count)),
        b2=np.zeros(class_count),
    )


def train_probe(dataset: LabeledDataset, hidden_dim: int, config: TrainConfig) -> ProbeModel:
    """
    Minibatch SGD with classical momentum on softmax cross-entropy.

    Deterministic for a fixed seed: initialization and every epoch's shuffle
    come from streams derived from (seed, stream, epoch).
    """
    if dataset.class_count < 2:
        raise LabelError(f"probe training needs at least 2 classes, got {dataset.class_count}")
    x = dataset.features.values
    y = dataset.labels
    params = {k: v.copy() for k, v in init_probe(dataset.dim, hidden_dim, dataset.class_count, config.seed)
              .parameters().items()}
    velocity = {k: np.zeros_like(v) for k, v in params.items()}

    history = [_loss(params, x, y, config.weight_decay)]
    logger.debug("probe init loss %.6f (n=%d, classes=%d)", history[0], y.size, dataset.class_count)
    for epoch in range(1, config.epochs + 1):
        order = derive_rng(config.seed, _SHUFFLE_STREAM, epoch).permutation(y.size)
        for start in range(0, y.size, config.batch_size):
            batch = order[start:start + config.batch_size]
            _, grads = _loss_and_gradients(params, x[batch], y[batch], config.weight_decay)
            for name in PARAMETER_NAMES:
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * grads[name]
                params[name] += velocity[name]
        loss = _loss(params, x, y, config.weight_decay)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(p)) for p in params.values()):
            raise DivergenceError(f"probe training diverged at epoch {epoch}", epoch=epoch)
        history.append(loss)
        logger.debug("epoch %d loss %.6f", epoch, loss)

    logger.info("trained probe: %d -> %d -> %d, loss %.4f -> %.4f",
                dataset.dim, hidden_dim, dataset.class_count, history[0], history[-1])
    return ProbeModel(**params, loss_history=tuple(history))


def extract_features(model: ProbeModel, features: FeatureMatrix) -> FeatureMatrix:
    """Post-ReLU hidden activations (the penultimate layer)."""
    if features.dim != model.input_dim:
        raise ShapeError(f"probe expects dim {model.input_dim}, features have dim {features.dim}")
    _, hidden, _ = _forward(model.parameters(), features.values)
    return FeatureMatrix(hidden)


def predict_proba(model: ProbeModel, features: FeatureMatrix) -> np.ndarray:
    """Softmax class probabilities, one row per sample."""
    if features.dim != model.input_dim:
        raise ShapeError(f"probe expects dim {model.input_dim}, features have dim {features.dim}")
    _, _, logits = _forward(model.parameters(), features.values)
    return np.exp(log_softmax(logits, axis=1))


def predict(model: ProbeModel, features: FeatureMatrix) -> np.ndarray:
    return np.argmax(predict_proba(model, features), axis=1)


def gradient_check(
    model: ProbeModel,
    x: np.ndarray,
    y: np.ndarray,
    weight_decay: float = 0.0,
    gradients: Optional[Gradients] = None,
    n_checks: int = 10,
    eps: float = 1e-5,
    seed: int = 0,
) -> float:
    """
    Max relative error between analytic and central-difference gradients.

    Up to n_checks entries per tensor are sampled. `gradients` defaults to
    loss_and_gradients and may be replaced to check another backward pass.
    """
    gradients = gradients or loss_and_gradients
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if y.size == 0:
        raise ShapeError("gradient check needs a non-empty batch")
    _, analytic = gradients(model, x, y, weight_decay)
    params = {k: v.copy() for k, v in model.parameters().items()}
    rng = derive_rng(seed)

    worst = 0.0
    for name in PARAMETER_NAMES:
        flat = params[name].reshape(-1)
        picks = rng.choice(flat.size, size=min(n_checks, flat.size), replace=False)
        for i in picks:
            original = flat[i]
            flat[i] = original + eps
            plus = _loss(params, x, y, weight_decay)
            flat[i] = original - eps
            minus = _loss(params, x, y, weight_decay)
            flat[i] = original
            numeric = (plus - minus) / (2 * eps)
            exact = float(np.asarray(analytic[name]).reshape(-1)[i])
            error = abs(exact - numeric) / max(1e-8, abs(exact) + abs(numeric))
            worst = max(worst, error)
    return worst
