"""
Probe network training, extraction and the finite-difference gradient oracle.
"""
import numpy as np
import pytest
from scipy.special import softmax

from conftest import make_blobs
from refinery.core.errors import LabelError, NonFiniteError, ShapeError
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.probe import ProbeModel
from refinery.schemas.training import ProbeConfig, TrainConfig
from refinery.services.probe_service import (
    extract_features,
    gradient_check,
    init_probe,
    loss_and_gradients,
    predict,
    predict_proba,
    train_probe,
)


@pytest.fixture
def two_blobs():
    points, ids = make_blobs([[-2.0, -2.0], [2.0, 2.0]], 50, 0.5, seed=3)
    return LabeledDataset(FeatureMatrix(points), ids, 2)


def _unmasked_gradients(model, x, y, weight_decay):
    """Backward pass that forgets the ReLU derivative."""
    p = model.parameters()
    pre = x @ p["w1"] + p["b1"]
    hidden = np.maximum(pre, 0.0)
    delta = softmax(hidden @ p["w2"] + p["b2"], axis=1)
    delta[np.arange(y.size), y] -= 1.0
    delta /= y.size
    grad_hidden = delta @ p["w2"].T
    grads = {
        "w1": x.T @ grad_hidden + weight_decay * p["w1"],
        "b1": grad_hidden.sum(axis=0),
        "w2": hidden.T @ delta + weight_decay * p["w2"],
        "b2": delta.sum(axis=0),
    }
    return 0.0, grads


def test_gradient_check_passes_on_random_instances():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        model = init_probe(5, 7, 3, seed=seed)
        x = rng.standard_normal((12, 5))
        y = rng.integers(0, 3, size=12)
        assert gradient_check(model, x, y, weight_decay=1e-3, seed=seed) < 1e-4


def test_gradient_check_single_sample():
    model = init_probe(4, 6, 2, seed=1)
    assert gradient_check(model, np.array([[0.3, -1.2, 0.8, 0.1]]), np.array([1])) < 1e-4


def test_gradient_check_catches_missing_relu_mask():
    rng = np.random.default_rng(0)
    model = init_probe(5, 7, 3, seed=0)
    x = rng.standard_normal((12, 5))
    y = rng.integers(0, 3, size=12)
    assert gradient_check(model, x, y, gradients=_unmasked_gradients) > 1e-2


def test_loss_and_gradients_shapes():
    model = init_probe(3, 4, 2, seed=0)
    loss, grads = loss_and_gradients(model, np.ones((2, 3)), np.array([0, 1]))
    assert loss > 0
    for name, value in model.parameters().items():
        assert grads[name].shape == value.shape


def test_training_reduces_loss_and_fits_separable_blobs(two_blobs):
    config = TrainConfig(epochs=50, batch_size=32, learning_rate=0.02, seed=5)
    model = train_probe(two_blobs, 8, config)
    assert len(model.loss_history) == 51
    assert model.loss_history[-1] < model.loss_history[0]
    accuracy = np.mean(predict(model, two_blobs.features) == two_blobs.labels)
    assert accuracy >= 0.99


def test_training_is_deterministic(two_blobs):
    config = TrainConfig(epochs=3, batch_size=16, seed=9)
    first = train_probe(two_blobs, 6, config)
    second = train_probe(two_blobs, 6, config)
    assert first.checksum() == second.checksum()
    assert first.loss_history == second.loss_history
    other = train_probe(two_blobs, 6, config.model_copy(update={"seed": 10}))
    assert other.checksum() != first.checksum()


def test_zero_learning_rate_keeps_initialization(two_blobs):
    config = TrainConfig(epochs=4, learning_rate=0.0, seed=2)
    model = train_probe(two_blobs, 5, config)
    assert model.checksum() == init_probe(2, 5, 2, seed=2).checksum()


def test_training_needs_two_classes():
    dataset = LabeledDataset(FeatureMatrix(np.zeros((4, 2))), [0, 0, 0, 0], 1)
    with pytest.raises(LabelError):
        train_probe(dataset, 4, TrainConfig(epochs=1))


def test_probe_config_splits_out_training_settings():
    config = ProbeConfig(hidden_dim=12, epochs=7, seed=4)
    assert config.train_config() == TrainConfig(epochs=7, seed=4)


def test_extract_features_is_post_relu():
    model = init_probe(4, 9, 3, seed=0)
    features = FeatureMatrix(np.random.default_rng(1).standard_normal((10, 4)))
    hidden = extract_features(model, features)
    assert hidden.values.shape == (10, 9)
    assert np.all(hidden.values >= 0)
    np.testing.assert_array_equal(hidden.values, extract_features(model, features).values)


def test_identity_layer_passes_positive_inputs():
    model = ProbeModel(w1=np.eye(3), b1=np.zeros(3), w2=np.ones((3, 2)), b2=np.zeros(2))
    x = FeatureMatrix([[0.5, 1.0, 2.0], [0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(extract_features(model, x).values, x.values)


def test_extract_rejects_wrong_dim():
    with pytest.raises(ShapeError):
        extract_features(init_probe(4, 3, 2, seed=0), FeatureMatrix(np.zeros((1, 5))))


def test_softmax_rows_sum_to_one():
    model = init_probe(3, 4, 5, seed=0)
    proba = predict_proba(model, FeatureMatrix(np.random.default_rng(0).standard_normal((20, 3)) * 10))
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)


def test_probe_model_validation():
    with pytest.raises(NonFiniteError):
        ProbeModel(w1=np.full((2, 2), np.nan), b1=np.zeros(2), w2=np.zeros((2, 2)), b2=np.zeros(2))
    with pytest.raises(ShapeError):
        ProbeModel(w1=np.zeros((2, 3)), b1=np.zeros(3), w2=np.zeros((2, 2)), b2=np.zeros(2))
    with pytest.raises(ShapeError):
        ProbeModel(w1=np.zeros((2, 3)), b1=np.zeros(3), w2=np.zeros((3, 1)), b2=np.zeros(1))
