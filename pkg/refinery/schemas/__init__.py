# Pydantic Schemas
from refinery.schemas.training import LinearProbeConfig, ProbeConfig, TrainConfig
from refinery.schemas.splitting import SplitMethod, SplitterConfig
from refinery.schemas.bucbam import BucbamConfig, InitialSplitter, MergeMode, PruneStrategy
from refinery.schemas.synth import SynthSpec
from refinery.schemas.pipeline import DataPaths, EvalConfig, PipelineConfig
from refinery.schemas.report import (
    BucbamClassReport,
    BucbamRunReport,
    ComparisonRow,
    EvalReport,
    HierarchyViolation,
    RecoveryReport,
    RunManifest,
    StageRecord,
    SweepRow,
    TaskManifestEntry,
    TaskScore,
    TasksManifest,
    ViolationKind,
)

__all__ = [
    # Training
    "LinearProbeConfig",
    "ProbeConfig",
    "TrainConfig",
    # Splitting
    "SplitMethod",
    "SplitterConfig",
    "BucbamConfig",
    "InitialSplitter",
    "MergeMode",
    "PruneStrategy",
    # Data
    "SynthSpec",
    "DataPaths",
    "EvalConfig",
    "PipelineConfig",
    # Reports
    "BucbamClassReport",
    "BucbamRunReport",
    "ComparisonRow",
    "EvalReport",
    "HierarchyViolation",
    "RecoveryReport",
    "RunManifest",
    "StageRecord",
    "SweepRow",
    "TaskManifestEntry",
    "TaskScore",
    "TasksManifest",
    "ViolationKind",
]
