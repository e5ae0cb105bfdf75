"""
Pydantic schemas for JSON reports, manifests and hierarchy checks.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from refinery.models.tasks import Metric

AP_VARIANT = "non-interpolated"
AVERAGING_NOTE = (
    "average is the arithmetic mean of per-task scores; accuracy and mAP "
    "tasks are averaged together"
)


class TaskScore(BaseModel):
    """One target task scored on one representation."""
    name: str
    metric: Metric
    score: float = Field(..., ge=0.0, le=1.0)
    n_train: int
    n_test: int
    class_count: int


class EvalReport(BaseModel):
    """Universality report of one representation."""
    model_config = ConfigDict(use_enum_values=True)

    representation: str = Field(..., description="spenet, finet or spefinet")
    splitter: Optional[str] = Field(default=None, description="Splitting method behind FiNet")
    dim: int
    tasks: list[TaskScore]
    average: float
    ap_variant: str = AP_VARIANT
    averaging: str = AVERAGING_NOTE
    config: dict = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_average(self) -> "EvalReport":
        """average must be the mean of the task scores."""
        if self.tasks:
            mean = sum(t.score for t in self.tasks) / len(self.tasks)
            if abs(mean - self.average) > 1e-12:
                raise ValueError(f"average {self.average} != mean of task scores {mean}")
        return self

    def score_of(self, task: str) -> float:
        return next(t.score for t in self.tasks if t.name == task)


class BucbamClassReport(BaseModel):
    """Cluster counts at each refinement step for one class."""
    class_id: int
    n_samples: int
    k_initial: int
    k_pruned: int
    k_merged: int
    whole_class_fallback: bool = False
    seconds: float = 0.0


class BucbamRunReport(BaseModel):
    """Parameters and per-class outcome of a refinement run."""
    parameters: dict
    classes: list[BucbamClassReport]
    total_seconds: float = 0.0

    @property
    def k_merged(self) -> list[int]:
        return [c.k_merged for c in self.classes]


class StageRecord(BaseModel):
    """One executed pipeline stage."""
    name: str
    seconds: float
    artifacts: list[str] = Field(default_factory=list)


class RunManifest(BaseModel):
    """Index of a run directory."""
    app: str
    version: str
    config: dict
    config_hash: str
    stages: list[StageRecord] = Field(default_factory=list)
    failed_stage: Optional[str] = None
    reports: dict[str, str] = Field(default_factory=dict)


class TaskManifestEntry(BaseModel):
    """File locations of one target task (relative to the manifest)."""
    name: str
    metric: Metric = Metric.ACCURACY
    class_count: Optional[int] = Field(default=None, ge=2)
    train_features: str
    train_labels: str
    test_features: str
    test_labels: str
    train_label_sets: Optional[str] = None
    test_label_sets: Optional[str] = None


class TasksManifest(BaseModel):
    """List of target tasks."""
    tasks: list[TaskManifestEntry]


class ViolationKind(str, Enum):
    """Structural problems found in a hierarchy."""
    LEVELING = "leveling"
    SINGLE_PARENT = "single_parent"
    ORPHAN = "orphan"
    EMPTY = "empty"
    UNKNOWN_NODE = "unknown_node"
    DUPLICATE_NODE = "duplicate_node"


class HierarchyViolation(BaseModel):
    """A single invariant violation."""
    kind: ViolationKind
    node: Optional[int] = None
    message: str


class SweepRow(BaseModel):
    """Averages of one K in a K sweep."""
    k: int
    spenet_average: float
    finet_average: float
    spefinet_average: float


class ComparisonRow(BaseModel):
    """Averages of one splitting method."""
    method: str
    finet_average: float
    spefinet_average: float
    mean_k: float


class RecoveryReport(BaseModel):
    """Agreement of a finer labeling with the planted subconcepts."""
    global_ari: float = Field(..., ge=-1.0, le=1.0)
    per_class_ari: list[float]
    k_per_class: list[int]
    subconcepts_per_class: int

    @property
    def exact_classes(self) -> int:
        """Classes whose cluster count matches the planted subconcept count."""
        return sum(1 for k in self.k_per_class if k == self.subconcepts_per_class)
