"""
Pydantic schema for the planted-subconcept generator.
"""
from pydantic import BaseModel, ConfigDict, Field


class SynthSpec(BaseModel):
    """Classes made of hidden Gaussian subconcepts."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_classes: int = Field(default=10, ge=1)
    subconcepts_per_class: int = Field(default=3, ge=1)
    samples_per_subconcept: int = Field(default=60, ge=1)
    dim: int = Field(default=16, ge=1)
    within_std: float = Field(default=0.25, gt=0.0)
    separation: float = Field(
        default=6.0,
        gt=0.0,
        description="Minimum distance between subconcept centers, in units of within_std",
    )
    seed: int = Field(default=42)

    # target tasks
    train_per_subconcept: int = Field(default=20, ge=1)
    test_per_subconcept: int = Field(default=20, ge=1)
    shift: float = Field(default=1.0, ge=0.0, description="Mean shift of the shifted task, in within_std")

    @property
    def n_subconcepts(self) -> int:
        return self.n_classes * self.subconcepts_per_class

    @property
    def n_samples(self) -> int:
        return self.n_subconcepts * self.samples_per_subconcept
