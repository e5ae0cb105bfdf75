# Domain types
from refinery.models.dataset import ClassView, FeatureMatrix, LabeledDataset, class_views
from refinery.models.hierarchy import FinerAssignment, Hierarchy, NodeMeta
from refinery.models.clustering import (
    ClusterAssignment,
    DiverseNegatives,
    KMeansResult,
    MergePlan,
    SimilarityMatrix,
)
from refinery.models.probe import ProbeModel
from refinery.models.linear import BinaryLinearModel, LossKind, OvaModel
from refinery.models.stats import ClusterStats, Histogram, PcaProjection
from refinery.models.tasks import (
    FusedRepresentation,
    Metric,
    PlantedTruth,
    TargetTask,
    TaskKind,
)

__all__ = [
    # Data
    "ClassView",
    "FeatureMatrix",
    "LabeledDataset",
    "class_views",
    # Hierarchy
    "FinerAssignment",
    "Hierarchy",
    "NodeMeta",
    # Clustering
    "ClusterAssignment",
    "DiverseNegatives",
    "KMeansResult",
    "MergePlan",
    "SimilarityMatrix",
    # Models
    "ProbeModel",
    "BinaryLinearModel",
    "LossKind",
    "OvaModel",
    # Diagnostics
    "ClusterStats",
    "Histogram",
    "PcaProjection",
    # Tasks
    "FusedRepresentation",
    "Metric",
    "PlantedTruth",
    "TargetTask",
    "TaskKind",
]
