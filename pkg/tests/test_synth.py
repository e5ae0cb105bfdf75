"""
Planted-subconcept generator, target tasks and recovery scoring.
"""
import numpy as np
import pytest
from scipy.spatial.distance import pdist

from refinery.core.errors import HierarchyError, SynthError
from refinery.models.hierarchy import FinerAssignment
from refinery.models.tasks import Metric, TaskKind
from refinery.repositories.task_repository import TaskRepository
from refinery.schemas.synth import SynthSpec
from refinery.services.synth_service import (
    generate_source,
    generate_targets,
    planted_ari,
    recombined_groups,
    save_synth_artifacts,
)


def test_default_spec_sizes():
    spec = SynthSpec()
    assert spec.n_subconcepts == 30
    assert spec.n_samples == 1800


def test_source_is_class_major(small_spec, planted):
    dataset, truth = planted
    assert dataset.n_samples == small_spec.n_samples == 120
    assert dataset.class_count == 3
    np.testing.assert_array_equal(dataset.class_counts(), [40, 40, 40])
    np.testing.assert_array_equal(truth.subconcept_labels // 2, truth.class_labels)
    np.testing.assert_array_equal(truth.subconcept_class(), [0, 0, 1, 1, 2, 2])


def test_centers_keep_their_distance(small_spec, planted):
    _, truth = planted
    assert pdist(truth.centers).min() >= small_spec.separation * small_spec.within_std


def test_generation_is_seeded(small_spec, planted):
    again, _ = generate_source(small_spec)
    np.testing.assert_array_equal(again.features.values, planted[0].features.values)
    other, _ = generate_source(small_spec.model_copy(update={"seed": 8}))
    assert not np.array_equal(other.features.values, planted[0].features.values)


def test_single_subconcept_classes():
    dataset, truth = generate_source(SynthSpec(n_classes=4, subconcepts_per_class=1, samples_per_subconcept=5))
    np.testing.assert_array_equal(truth.subconcept_labels, truth.class_labels)
    assert dataset.n_samples == 20


def test_infeasible_packing_raises():
    with pytest.raises(SynthError):
        generate_source(SynthSpec(dim=1))


def test_recovery_of_the_planted_labeling(planted):
    _, truth = planted
    exact = FinerAssignment(truth.subconcept_labels, truth.n_subconcepts, truth.subconcept_class())
    report = planted_ari(exact, truth)
    assert report.global_ari == pytest.approx(1.0)
    assert report.per_class_ari == pytest.approx([1.0, 1.0, 1.0])
    assert report.exact_classes == 3


def test_recovery_of_unsplit_classes(planted):
    _, truth = planted
    coarse = FinerAssignment(truth.class_labels, 3, np.arange(3))
    report = planted_ari(coarse, truth)
    assert report.per_class_ari == pytest.approx([0.0, 0.0, 0.0])
    assert report.k_per_class == [1, 1, 1]
    assert report.exact_classes == 0


def test_recovery_of_random_splits(planted):
    _, truth = planted
    rng = np.random.default_rng(0)
    labels = np.concatenate([3 * c + rng.permutation(np.arange(40) % 3) for c in range(3)])
    report = planted_ari(FinerAssignment(labels, 9, np.repeat(np.arange(3), 3)), truth)
    assert report.global_ari < 0.5
    assert all(abs(v) < 0.2 for v in report.per_class_ari)


def test_recovery_rejects_mismatched_labelings(planted):
    _, truth = planted
    with pytest.raises(HierarchyError):
        planted_ari(FinerAssignment(np.zeros(5, dtype=int), 1, [0]), truth)
    swapped = FinerAssignment(truth.subconcept_labels, 6, [1, 1, 0, 0, 2, 2])
    with pytest.raises(HierarchyError):
        planted_ari(swapped, truth)


@pytest.mark.parametrize("n_classes, per_class, expected", [(10, 3, 15), (3, 2, 4), (2, 1, 1)])
def test_recombined_groups_cover_every_subconcept_once(n_classes, per_class, expected):
    groups = recombined_groups(n_classes, per_class, np.random.default_rng(1))
    assert len(groups) == expected
    members = sorted(s for group in groups for s in group)
    assert members == list(range(n_classes * per_class))
    for group in groups:
        assert len({s // per_class for s in group}) == len(group)


def test_target_tasks(small_spec, planted):
    _, truth = planted
    tasks = {task.name: task for task in generate_targets(truth, small_spec)}
    assert list(tasks) == ["subconcept", "recombined", "shifted"]

    subconcept = tasks["subconcept"]
    assert subconcept.metric is Metric.ACCURACY
    assert subconcept.class_count == 6
    assert subconcept.train.n_samples == subconcept.test.n_samples == 48
    assert tasks["recombined"].metric is Metric.MAP
    assert tasks["recombined"].class_count == 4
    assert tasks["shifted"].class_count == 6
    assert not np.array_equal(tasks["shifted"].train.features.values, subconcept.train.features.values)


def test_task_streams_do_not_depend_on_other_kinds(small_spec, planted):
    _, truth = planted
    alone = generate_targets(truth, small_spec, [TaskKind.SHIFTED])[0]
    full = generate_targets(truth, small_spec)[2]
    np.testing.assert_array_equal(alone.test.features.values, full.test.features.values)


def test_synth_artifacts_reload(tmp_path, small_spec, planted):
    dataset, truth = planted
    tasks = generate_targets(truth, small_spec)
    paths = save_synth_artifacts(tmp_path, dataset, truth, tasks)
    assert sorted(p.name for p in paths.values()) == ["source.finf", "source_labels.csv", "tasks.json", "truth.csv"]
    assert (tmp_path / "truth.csv").read_text().splitlines()[:2] == ["sample,class,subconcept", "0,0,0"]

    loaded = TaskRepository(paths["tasks"]).load_all()
    assert [t.name for t in loaded] == [t.name for t in tasks]
    for original, back in zip(tasks, loaded):
        assert back.metric is original.metric
        np.testing.assert_array_equal(back.test.labels, original.test.labels)
        np.testing.assert_allclose(back.train.features.values, original.train.features.values, rtol=1e-6)
