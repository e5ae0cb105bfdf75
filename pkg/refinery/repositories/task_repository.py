"""
Tasks manifest: a JSON list of target tasks with their feature/label files.
"""
import json
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from refinery.core.errors import ConfigError
from refinery.models.dataset import LabeledDataset
from refinery.models.tasks import TargetTask
from refinery.repositories.finf import load_features, save_features
from refinery.repositories.labels import load_label_sets, load_labels, save_label_sets, save_labels
from refinery.schemas.report import TaskManifestEntry, TasksManifest

PathLike = Union[str, Path]


class TaskRepository:
    """
    Reads and writes target-task suites.

    File paths inside the manifest are relative to the manifest's directory.
    """

    def __init__(self, manifest_path: PathLike):
        self.manifest_path = Path(manifest_path)
        self.root = self.manifest_path.parent

    def load_manifest(self) -> TasksManifest:
        try:
            return TasksManifest.model_validate_json(self.manifest_path.read_text(encoding="utf-8"))
        except ValidationError as exc:
            raise ConfigError(f"{self.manifest_path}: invalid tasks manifest: {exc}") from exc

    def load_all(self) -> list[TargetTask]:
        return [self._load_task(entry) for entry in self.load_manifest().tasks]

    def save_all(self, tasks: list[TargetTask]) -> Path:
        """Write every task's files next to the manifest, then the manifest."""
        entries = [self._save_task(task) for task in tasks]
        manifest = TasksManifest(tasks=entries)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(
            json.dumps(manifest.model_dump(mode="json", exclude_none=True), indent=2) + "\n",
            encoding="utf-8",
        )
        return self.manifest_path

    def _load_split(self, features: str, labels: str, class_count) -> LabeledDataset:
        matrix = load_features(self.root / features)
        values, count = load_labels(self.root / labels, matrix.n_samples, class_count)
        return LabeledDataset(matrix, values, count)

    def _load_task(self, entry: TaskManifestEntry) -> TargetTask:
        train = self._load_split(entry.train_features, entry.train_labels, entry.class_count)
        test = self._load_split(entry.test_features, entry.test_labels, train.class_count)
        train_sets = test_sets = None
        if entry.train_label_sets:
            train_sets = load_label_sets(self.root / entry.train_label_sets, train.n_samples, train.class_count)
        if entry.test_label_sets:
            test_sets = load_label_sets(self.root / entry.test_label_sets, test.n_samples, test.class_count)
        return TargetTask(
            name=entry.name,
            train=train,
            test=test,
            metric=entry.metric,
            train_relevance=train_sets,
            test_relevance=test_sets,
        )

    def _save_task(self, task: TargetTask) -> TaskManifestEntry:
        files = {}
        for split in ("train", "test"):
            data: LabeledDataset = getattr(task, split)
            files[f"{split}_features"] = save_features(data.features, self.root / f"{task.name}_{split}.finf").name
            files[f"{split}_labels"] = save_labels(data.labels, self.root / f"{task.name}_{split}_labels.csv").name
            relevance = getattr(task, f"{split}_relevance")
            if relevance is not None:
                files[f"{split}_label_sets"] = save_label_sets(
                    relevance, self.root / f"{task.name}_{split}_label_sets.csv"
                ).name
        return TaskManifestEntry(name=task.name, metric=task.metric, class_count=task.class_count, **files)
