"""
Shared fixtures: seeded generators, blob datasets, small planted sources and
fast pipeline configurations.
"""
import numpy as np
import pytest

from refinery.models.dataset import ClassView, FeatureMatrix, LabeledDataset
from refinery.schemas.bucbam import BucbamConfig
from refinery.schemas.pipeline import EvalConfig, PipelineConfig
from refinery.schemas.splitting import SplitMethod, SplitterConfig
from refinery.schemas.synth import SynthSpec
from refinery.schemas.training import LinearProbeConfig, ProbeConfig
from refinery.services.synth_service import generate_source


def make_blobs(centers, per_blob: int, std: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs, blob-major; returns (points, blob ids)."""
    centers = np.asarray(centers, dtype=np.float64)
    rng = np.random.default_rng(seed)
    points = np.repeat(centers, per_blob, axis=0) + rng.normal(0.0, std, size=(len(centers) * per_blob, centers.shape[1]))
    return points, np.repeat(np.arange(len(centers)), per_blob)


def whole_view(n: int, class_id: int = 0) -> ClassView:
    return ClassView(class_id, np.arange(n))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def three_blobs():
    """Three far-apart 2-D blobs of 30 points as one labeled dataset."""
    points, ids = make_blobs([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], 30, 0.3, seed=1)
    return LabeledDataset(FeatureMatrix(points), ids, 3)


@pytest.fixture
def small_spec():
    return SynthSpec(
        n_classes=3,
        subconcepts_per_class=2,
        samples_per_subconcept=20,
        dim=6,
        seed=7,
        train_per_subconcept=8,
        test_per_subconcept=8,
    )


@pytest.fixture
def planted(small_spec):
    return generate_source(small_spec)


@pytest.fixture
def fast_config(small_spec, tmp_path):
    """A complete run on the small planted source that finishes in seconds."""
    probe = ProbeConfig(hidden_dim=8, epochs=3, batch_size=16, learning_rate=0.05)
    return PipelineConfig(
        synth=small_spec,
        spe_probe=probe,
        fine_probe=probe,
        splitter=SplitterConfig(method=SplitMethod.KMEANS, k=2),
        bucbam=BucbamConfig(k_initial=4, min_cluster_size=5, classifier_iters=50),
        eval=EvalConfig(linear_probe=LinearProbeConfig(iters=40)),
        output_dir=tmp_path / "run",
        seed=3,
    )


@pytest.fixture(scope="session")
def canonical():
    """The canonical planted source: 10 classes x 3 subconcepts x 60, dim 16, seed 42."""
    return generate_source(SynthSpec())
