"""
Accuracy, average precision and the linear-probe evaluation harness.
"""
import math

import numpy as np
import pytest

from conftest import make_blobs
from refinery.core.errors import MetricError, ShapeError
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.tasks import Metric, TargetTask
from refinery.schemas.training import LinearProbeConfig
from refinery.services.eval_service import (
    accuracy,
    average_precision,
    evaluate_representation,
    mean_ap,
)
from refinery.services.fusion_service import IdentityExtractor


@pytest.mark.parametrize(
    "scores, relevant, expected",
    [
        ([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0], (1.0 + 2.0 / 3.0) / 2.0),
        ([0.9, 0.8, 0.7, 0.6], [0, 0, 0, 1], 0.25),
        ([0.3, 0.2, 0.1], [1, 1, 1], 1.0),
        ([0.5, 0.5], [0, 1], 0.5),
    ],
)
def test_average_precision_examples(scores, relevant, expected):
    assert average_precision(scores, relevant) == pytest.approx(expected, abs=1e-12)


def test_average_precision_matches_direct_count(rng):
    for _ in range(20):
        scores = rng.integers(0, 5, size=30).astype(float)
        relevant = rng.random(30) < 0.3
        relevant[0] = True
        order = sorted(range(30), key=lambda i: (-scores[i], i))
        precisions = []
        hits = 0
        for rank, i in enumerate(order, start=1):
            if relevant[i]:
                hits += 1
                precisions.append(hits / rank)
        assert average_precision(scores, relevant) == pytest.approx(math.fsum(precisions) / hits, abs=1e-12)


def test_average_precision_needs_relevant_items():
    with pytest.raises(MetricError):
        average_precision([0.1, 0.2], [0, 0])
    with pytest.raises(ShapeError):
        average_precision([0.1, 0.2], [0, 0, 1])


def test_mean_ap_skips_empty_classes():
    scores = np.array([[0.9, 0.1, 0.0], [0.2, 0.8, 0.0], [0.7, 0.3, 0.0]])
    relevance = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]], dtype=bool)
    assert mean_ap(scores, relevance) == pytest.approx(1.0)
    with pytest.raises(MetricError):
        mean_ap(scores, np.zeros((3, 3), dtype=bool))


def test_accuracy():
    assert accuracy([0, 1, 2, 2], [0, 1, 1, 2]) == 0.75
    with pytest.raises(ShapeError):
        accuracy([], [])


def _blob_task(metric=Metric.ACCURACY, seed=0):
    centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]]
    train_x, train_y = make_blobs(centers, 20, 0.5, seed=seed)
    test_x, test_y = make_blobs(centers, 20, 0.5, seed=seed + 1)
    return TargetTask(
        name=f"blobs-{metric.value}",
        train=LabeledDataset(FeatureMatrix(train_x), train_y, 3),
        test=LabeledDataset(FeatureMatrix(test_x), test_y, 3),
        metric=metric,
    )


def test_evaluate_representation_reports_every_task():
    tasks = [_blob_task(), _blob_task(Metric.MAP, seed=4)]
    report = evaluate_representation(
        IdentityExtractor(2, "raw"), tasks, LinearProbeConfig(iters=200), config_echo={"seed": 1}, threads=2
    )
    assert report.representation == "raw"
    assert report.dim == 2
    assert [t.name for t in report.tasks] == ["blobs-accuracy", "blobs-mAP"]
    assert report.average == pytest.approx(np.mean([t.score for t in report.tasks]))
    assert report.score_of("blobs-accuracy") >= 0.9
    assert report.score_of("blobs-mAP") >= 0.9
    assert report.config["seed"] == 1
    assert report.config["linear_probe"]["iters"] == 200


def test_evaluation_is_reproducible():
    tasks = [_blob_task()]
    config = LinearProbeConfig(iters=100)
    first = evaluate_representation(IdentityExtractor(2), tasks, config, threads=1)
    second = evaluate_representation(IdentityExtractor(2), tasks, config, threads=4)
    assert first.model_dump_json() == second.model_dump_json()


def test_multilabel_task_is_scored_with_label_sets():
    base = _blob_task(Metric.MAP)
    train_sets = base.relevance("train").copy()
    train_sets[:, 2] |= train_sets[:, 1]
    test_sets = base.relevance("test").copy()
    test_sets[:, 2] |= test_sets[:, 1]
    task = TargetTask("sets", base.train, base.test, Metric.MAP, train_sets, test_sets)
    report = evaluate_representation(IdentityExtractor(2), [task], LinearProbeConfig(iters=200))
    assert 0.0 < report.average <= 1.0


def test_label_sets_require_map():
    base = _blob_task()
    with pytest.raises(ShapeError):
        TargetTask("sets", base.train, base.test, Metric.ACCURACY, base.relevance("train"), None)


def test_evaluation_needs_tasks():
    with pytest.raises(ShapeError):
        evaluate_representation(IdentityExtractor(2), [], LinearProbeConfig())
