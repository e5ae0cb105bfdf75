"""
Finer levels, relabeling and the hierarchy checks.
"""
import numpy as np
import pytest

from refinery.core.errors import HierarchyError
from refinery.models.clustering import ClusterAssignment
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.hierarchy import FinerAssignment, Hierarchy
from refinery.repositories.hierarchy_repository import (
    load_finer_assignment,
    load_hierarchy,
    save_finer_assignment,
    save_hierarchy,
)
from refinery.schemas.report import ViolationKind
from refinery.services.hierarchy_service import (
    add_finer_level,
    assignments_from_finer,
    group_by_parent,
    relabel_dataset,
    validate_hierarchy,
)

LABELS = np.array([0, 1, 0, 1, 0, 1, 1])


def _assignments():
    # class 0 -> samples 0, 2, 4 split in 2; class 1 -> samples 1, 3, 5, 6 split in 3
    return [
        ClusterAssignment(0, [0, 2, 4], [0, 1, 0]),
        ClusterAssignment(1, [1, 3, 5, 6], [2, 0, 1, 0]),
    ]


def test_finer_level_is_class_major():
    hierarchy, finer = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    assert finer.finer_class_count == 5
    np.testing.assert_array_equal(finer.parent_map, [0, 0, 1, 1, 1])
    np.testing.assert_array_equal(finer.labels, [0, 4, 1, 2, 0, 3, 2])
    np.testing.assert_array_equal(finer.specific_labels(), LABELS)
    np.testing.assert_array_equal(finer.k_per_class(), [2, 3])
    assert hierarchy.depth == 2
    assert hierarchy.leaf_count == 5
    assert validate_hierarchy(hierarchy) == []


def test_each_finer_node_has_one_parent():
    hierarchy, _ = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    for node in hierarchy.levels[1]:
        assert len(hierarchy.parents(node)) == 1
    assert sorted(hierarchy.children(0) + hierarchy.children(1)) == sorted(hierarchy.levels[1])
    assert hierarchy.meta[hierarchy.levels[1][2]].source_class == 1
    assert hierarchy.meta[hierarchy.levels[1][2]].local_cluster == 0


def test_levels_can_be_stacked():
    hierarchy, finer = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    single = [
        ClusterAssignment.single(f, np.flatnonzero(finer.labels == f)) for f in range(finer.finer_class_count)
    ]
    deeper, again = add_finer_level(hierarchy, single, finer.labels)
    assert deeper.depth == 3
    assert validate_hierarchy(deeper) == []
    np.testing.assert_array_equal(again.labels, finer.labels)


def test_finer_level_rejects_incomplete_cover():
    assignments = [ClusterAssignment(0, [0, 2], [0, 1]), _assignments()[1]]
    with pytest.raises(HierarchyError):
        add_finer_level(Hierarchy.root(2), assignments, LABELS)


def test_finer_level_rejects_foreign_samples():
    assignments = [ClusterAssignment(0, [0, 1, 4], [0, 0, 1]), ClusterAssignment(1, [2, 3, 5, 6], [0, 0, 1, 1])]
    with pytest.raises(HierarchyError):
        add_finer_level(Hierarchy.root(2), assignments, LABELS)


def test_finer_level_needs_every_class():
    with pytest.raises(HierarchyError):
        add_finer_level(Hierarchy.root(3), _assignments(), LABELS)


def test_relabel_keeps_features_and_groups_back():
    dataset = LabeledDataset(FeatureMatrix(np.arange(14.0).reshape(7, 2)), LABELS, 2)
    _, finer = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    relabeled = relabel_dataset(dataset, finer)
    assert relabeled.class_count == 5
    assert relabeled.level == 1
    assert relabeled.features is dataset.features
    np.testing.assert_array_equal(group_by_parent(relabeled.labels, finer.parent_map), dataset.labels)


def test_relabel_rejects_non_refinement():
    dataset = LabeledDataset(FeatureMatrix(np.zeros((7, 1))), 1 - LABELS, 2)
    _, finer = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    with pytest.raises(HierarchyError):
        relabel_dataset(dataset, finer)


def test_assignments_from_finer_inverts_the_level():
    _, finer = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    recovered = assignments_from_finer(finer)
    for original, back in zip(_assignments(), recovered):
        assert back.class_id == original.class_id
        np.testing.assert_array_equal(back.sample_indices, original.sample_indices)
        np.testing.assert_array_equal(back.member_of, original.member_of)


def test_finer_assignment_validation():
    with pytest.raises(HierarchyError):
        FinerAssignment(labels=[0, 1], finer_class_count=3, parent_map=[0, 0, 1])
    with pytest.raises(HierarchyError):
        FinerAssignment(labels=[0, 1], finer_class_count=2, parent_map=[0])


def test_cluster_assignment_rejects_empty_cluster():
    with pytest.raises(HierarchyError):
        ClusterAssignment(0, [0, 1, 2], [0, 2, 2])


def test_validate_reports_multiple_parents():
    hierarchy = Hierarchy(levels=((0, 1), (2,)), edges=((0, 2), (1, 2)))
    kinds = [v.kind for v in validate_hierarchy(hierarchy)]
    assert ViolationKind.SINGLE_PARENT in kinds


def test_validate_reports_level_skips_and_orphans():
    skipping = Hierarchy(levels=((0,), (1,), (2,)), edges=((0, 1), (0, 2)))
    assert ViolationKind.LEVELING in [v.kind for v in validate_hierarchy(skipping)]

    orphan = Hierarchy(levels=((0,), (1, 2)), edges=((0, 1),))
    violations = validate_hierarchy(orphan)
    assert [(v.kind, v.node) for v in violations] == [(ViolationKind.ORPHAN, 2)]


def test_validate_reports_unknown_nodes():
    hierarchy = Hierarchy(levels=((0,), (1,)), edges=((0, 1), (0, 9)))
    assert ViolationKind.UNKNOWN_NODE in [v.kind for v in validate_hierarchy(hierarchy)]


def test_hierarchy_documents(tmp_path):
    hierarchy, finer = add_finer_level(Hierarchy.root(2), _assignments(), LABELS)
    loaded = load_hierarchy(save_hierarchy(hierarchy, tmp_path / "hierarchy.json"))
    assert loaded.levels == hierarchy.levels
    assert loaded.edges == hierarchy.edges
    assert loaded.meta == hierarchy.meta

    path = save_finer_assignment(finer, tmp_path / "finer.csv")
    assert path.read_text().splitlines()[:2] == ["sample,specific_class,finer_class", "0,0,0"]
    back = load_finer_assignment(path)
    np.testing.assert_array_equal(back.labels, finer.labels)
    np.testing.assert_array_equal(back.parent_map, finer.parent_map)


def test_finer_assignment_csv_rejects_two_parents(tmp_path):
    path = tmp_path / "finer.csv"
    path.write_text("sample,specific_class,finer_class\n0,0,0\n1,1,0\n")
    with pytest.raises(HierarchyError):
        load_finer_assignment(path)
