# File repositories
from refinery.repositories.finf import load_features, load_tensors, save_features, save_tensors
from refinery.repositories.labels import (
    load_class_names,
    load_label_sets,
    load_labels,
    save_class_names,
    save_label_sets,
    save_labels,
)
from refinery.repositories.hierarchy_repository import (
    load_finer_assignment,
    load_hierarchy,
    save_finer_assignment,
    save_hierarchy,
)
from refinery.repositories.model_repository import (
    load_linear,
    load_ova,
    load_probe,
    save_linear,
    save_ova,
    save_probe,
)
from refinery.repositories.task_repository import TaskRepository
from refinery.repositories.report_repository import load_report, save_json, save_report, save_table

__all__ = [
    # Features
    "load_features",
    "save_features",
    "load_tensors",
    "save_tensors",
    # Labels
    "load_class_names",
    "load_label_sets",
    "load_labels",
    "save_class_names",
    "save_label_sets",
    "save_labels",
    # Hierarchy
    "load_finer_assignment",
    "load_hierarchy",
    "save_finer_assignment",
    "save_hierarchy",
    # Models
    "load_linear",
    "load_ova",
    "load_probe",
    "save_linear",
    "save_ova",
    "save_probe",
    # Tasks and reports
    "TaskRepository",
    "load_report",
    "save_json",
    "save_report",
    "save_table",
]
