"""
Checkpoints for probe networks and linear models, stored as FINC containers.
"""
from pathlib import Path
from typing import Union

import numpy as np

from refinery.core.errors import FeatureFormatError
from refinery.models.linear import BinaryLinearModel, LossKind, OvaModel
from refinery.models.probe import PARAMETER_NAMES, ProbeModel
from refinery.repositories.finf import load_tensors, save_tensors

PathLike = Union[str, Path]


def _expect_kind(meta: dict, kind: str, path) -> None:
    if meta.get("kind") != kind:
        raise FeatureFormatError(f"{path}: expected a {kind} checkpoint, found {meta.get('kind')!r}")


def save_probe(model: ProbeModel, path: PathLike) -> Path:
    meta = {"kind": "probe", "activation": "relu", "loss_history": list(model.loss_history)}
    return save_tensors(model.parameters(), path, metadata=meta)


def load_probe(path: PathLike) -> ProbeModel:
    tensors, meta = load_tensors(path)
    _expect_kind(meta, "probe", path)
    missing = [n for n in PARAMETER_NAMES if n not in tensors]
    if missing:
        raise FeatureFormatError(f"{path}: probe checkpoint lacks {missing}")
    return ProbeModel(
        **{n: tensors[n] for n in PARAMETER_NAMES},
        loss_history=tuple(meta.get("loss_history", ())),
    )


def _linear_tensors(models: tuple[BinaryLinearModel, ...]) -> dict[str, np.ndarray]:
    return {
        "w": np.stack([m.w for m in models]),
        "b": np.array([m.b for m in models]),
        "l2": np.array([m.l2 for m in models]),
    }


def _linear_models(tensors: dict, kinds: list[str]) -> list[BinaryLinearModel]:
    return [
        BinaryLinearModel(w=tensors["w"][i], b=float(tensors["b"][i]),
                          loss_kind=LossKind(kinds[i]), l2=float(tensors["l2"][i]))
        for i in range(len(kinds))
    ]


def save_linear(model: BinaryLinearModel, path: PathLike) -> Path:
    meta = {"kind": "linear", "loss_kinds": [model.loss_kind.value]}
    return save_tensors(_linear_tensors((model,)), path, metadata=meta)


def load_linear(path: PathLike) -> BinaryLinearModel:
    tensors, meta = load_tensors(path)
    _expect_kind(meta, "linear", path)
    return _linear_models(tensors, meta["loss_kinds"])[0]


def save_ova(model: OvaModel, path: PathLike) -> Path:
    meta = {"kind": "ova", "loss_kinds": [m.loss_kind.value for m in model.models]}
    return save_tensors(_linear_tensors(model.models), path, metadata=meta)


def load_ova(path: PathLike) -> OvaModel:
    tensors, meta = load_tensors(path)
    _expect_kind(meta, "ova", path)
    return OvaModel(tuple(_linear_models(tensors, meta["loss_kinds"])))
