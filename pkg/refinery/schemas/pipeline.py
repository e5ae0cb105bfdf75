"""
Pydantic schema for the end-to-end run configuration (TOML document).
"""
import hashlib
import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from refinery.models.tasks import TaskKind
from refinery.schemas.bucbam import BucbamConfig
from refinery.schemas.splitting import SplitterConfig
from refinery.schemas.synth import SynthSpec
from refinery.schemas.training import LinearProbeConfig, ProbeConfig


class DataPaths(BaseModel):
    """User-supplied source dataset."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    features: Path = Field(..., description="FINF feature file")
    labels: Path = Field(..., description="sample,label CSV")
    names: Optional[Path] = Field(default=None, description="Optional class-names sidecar")


class EvalConfig(BaseModel):
    """Target-task suite and the probe trained on each task."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    tasks: Optional[Path] = Field(default=None, description="Tasks manifest JSON")
    kinds: list[TaskKind] = Field(
        default_factory=lambda: [TaskKind.SUBCONCEPT, TaskKind.RECOMBINED, TaskKind.SHIFTED],
        description="Synthetic task kinds generated when no manifest is given",
    )
    linear_probe: LinearProbeConfig = Field(default_factory=LinearProbeConfig)


class PipelineConfig(BaseModel):
    """Everything a run needs; echoed into the run manifest."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    data: Optional[DataPaths] = None
    synth: Optional[SynthSpec] = None
    spe_probe: ProbeConfig = Field(default_factory=ProbeConfig)
    fine_probe: ProbeConfig = Field(default_factory=ProbeConfig)
    splitter: SplitterConfig = Field(default_factory=SplitterConfig)
    bucbam: BucbamConfig = Field(default_factory=BucbamConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    output_dir: Path = Field(default=Path("runs/default"))
    seed: int = Field(default=42, description="Master seed")
    export_stats: bool = True

    @model_validator(mode="after")
    def validate_source(self) -> "PipelineConfig":
        """Exactly one data source; user data needs a tasks manifest."""
        if (self.data is None) == (self.synth is None):
            raise ValueError("provide exactly one of [data] or [synth]")
        if self.data is not None and self.eval.tasks is None:
            raise ValueError("user data requires eval.tasks (a tasks manifest)")
        return self

    @classmethod
    def default_synthetic(cls, **overrides) -> "PipelineConfig":
        """Canonical planted configuration (C=10, G=3, 60/subconcept, dim 16, sep 6, seed 42)."""
        return cls(synth=SynthSpec(), **overrides)

    def echo(self) -> dict:
        """JSON-ready effective configuration, output_dir excluded."""
        return self.model_dump(mode="json", exclude={"output_dir"})

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON echo."""
        canonical = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
