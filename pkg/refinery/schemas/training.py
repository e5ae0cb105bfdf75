"""
Pydantic schemas for probe and linear-model training settings.
"""
from pydantic import BaseModel, ConfigDict, Field

from refinery.models.linear import LossKind


class TrainConfig(BaseModel):
    """SGD settings for a probe network."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=60, ge=0, description="Passes over the training set")
    batch_size: int = Field(default=32, ge=1, description="Minibatch size")
    learning_rate: float = Field(
        default=0.01,
        ge=0.0,
        description="SGD step; 0 leaves the initialization untouched",
    )
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0, description="Classical momentum")
    weight_decay: float = Field(default=1e-4, ge=0.0, description="L2 penalty on weights")
    seed: int = Field(default=0, description="Seeds init and the per-epoch shuffles")


class ProbeConfig(TrainConfig):
    """Training settings plus the width of the representation layer."""
    hidden_dim: int = Field(default=10, ge=1, description="Penultimate-layer width")

    def train_config(self) -> TrainConfig:
        return TrainConfig(**self.model_dump(exclude={"hidden_dim"}))


class LinearProbeConfig(BaseModel):
    """Full-batch gradient descent settings for linear models."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    loss_kind: LossKind = Field(default=LossKind.HINGE, description="hinge (SVM) or logistic")
    l2: float = Field(default=1e-3, ge=0.0)
    iters: int = Field(default=500, ge=0)
    lr: float = Field(default=0.1, gt=0.0)
    standardize: bool = Field(
        default=True,
        description="Center and scale features inside training (folded back into w, b)",
    )
