"""
Universality harness: linear probes on frozen representations, accuracy and
non-interpolated mean average precision.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from refinery.core.errors import MetricError, RefineryError, ShapeError
from refinery.core.parallel import parallel_map
from refinery.models.tasks import Metric, TargetTask
from refinery.schemas.report import EvalReport, TaskScore
from refinery.schemas.training import LinearProbeConfig
from refinery.services.fusion_service import Extractor
from refinery.services.linear_service import decision_function, predict, train_ova_with

logger = logging.getLogger(__name__)


def accuracy(predicted, truth) -> float:
    """Fraction of exact matches."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.size == 0:
        raise ShapeError(f"accuracy needs equal non-empty vectors, got {predicted.shape} and {truth.shape}")
    return float(np.mean(predicted == truth))


def average_precision(scores, relevant) -> float:
    """
    Non-interpolated AP: mean over relevant ranks r of precision@r.

    Ranking is by descending score; equal scores keep index order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    relevant = np.asarray(relevant, dtype=bool)
    if scores.shape != relevant.shape:
        raise ShapeError(f"{scores.size} scores for {relevant.size} relevance flags")
    n_relevant = int(relevant.sum())
    if n_relevant == 0:
        raise MetricError("average precision is undefined without relevant items")
    order = np.lexsort((np.arange(scores.size), -scores))
    hits = relevant[order]
    ranks = np.flatnonzero(hits) + 1
    precisions = [(found + 1) / rank for found, rank in enumerate(ranks.tolist())]
    return math.fsum(precisions) / n_relevant


def mean_ap(scores: np.ndarray, relevance: np.ndarray) -> float:
    """Unweighted mean of per-class AP over the classes that have relevant items."""
    scores = np.asarray(scores, dtype=np.float64)
    relevance = np.asarray(relevance, dtype=bool)
    if scores.shape != relevance.shape or scores.ndim != 2:
        raise ShapeError(f"score matrix {scores.shape} does not match relevance {relevance.shape}")
    per_class = [
        average_precision(scores[:, c], relevance[:, c])
        for c in range(scores.shape[1])
        if relevance[:, c].any()
    ]
    if not per_class:
        raise MetricError("mean AP needs at least one class with a relevant item")
    return math.fsum(per_class) / len(per_class)


def score_task(extractor: Extractor, task: TargetTask, config: LinearProbeConfig) -> TaskScore:
    """Train a one-versus-all probe on the extracted train split and score the test split."""
    train = task.train.with_features(extractor(task.train.features))
    test_features = extractor(task.test.features)
    relevance = task.train_relevance if task.multilabel else None
    model = train_ova_with(train, config, relevance=relevance, threads=1)
    if task.metric is Metric.MAP:
        value = mean_ap(decision_function(model, test_features), task.relevance("test"))
    else:
        value = accuracy(predict(model, test_features), task.test.labels)
    logger.debug("%s on %s: %s = %.4f", extractor.name, task.name, task.metric.value, value)
    return TaskScore(
        name=task.name,
        metric=task.metric,
        score=value,
        n_train=task.train.n_samples,
        n_test=task.test.n_samples,
        class_count=task.class_count,
    )


def evaluate_representation(
    extractor: Extractor,
    tasks: Sequence[TargetTask],
    config: LinearProbeConfig,
    splitter: Optional[str] = None,
    config_echo: Optional[dict] = None,
    threads: Optional[int] = None,
) -> EvalReport:
    """
    Score a frozen representation on every task; the report average is the
    plain mean of the task scores, whatever their metric.
    """
    if not tasks:
        raise ShapeError("evaluation needs at least one target task")
    before = extractor.fingerprint()
    scores = parallel_map(lambda task: score_task(extractor, task, config), tasks, threads)
    if extractor.fingerprint() != before:
        raise RefineryError(f"extractor {extractor.name} changed during evaluation")

    echo = {"linear_probe": config.model_dump(mode="json")}
    echo.update(config_echo or {})
    report = EvalReport(
        representation=extractor.name,
        splitter=splitter,
        dim=extractor.dim,
        tasks=scores,
        average=sum(s.score for s in scores) / len(scores),
        config=echo,
    )
    logger.info("%s: average %.4f over %d tasks", extractor.name, report.average, len(scores))
    return report
