"""
Hierarchy JSON documents and finer-assignment CSVs.
"""
import csv
import json
from pathlib import Path
from typing import Union

import numpy as np

from refinery.core.errors import HierarchyError, LabelError
from refinery.models.hierarchy import FinerAssignment, Hierarchy, NodeMeta

PathLike = Union[str, Path]
ASSIGNMENT_HEADER = ("sample", "specific_class", "finer_class")


def hierarchy_to_dict(hierarchy: Hierarchy) -> dict:
    return {
        "levels": [list(level) for level in hierarchy.levels],
        "edges": [[p, c] for p, c in hierarchy.edges],
        "meta": {
            str(node): {"source_class": m.source_class, "local_cluster": m.local_cluster}
            for node, m in sorted(hierarchy.meta.items())
        },
    }


def hierarchy_from_dict(doc: dict) -> Hierarchy:
    try:
        return Hierarchy(
            levels=tuple(tuple(int(n) for n in level) for level in doc["levels"]),
            edges=tuple((int(p), int(c)) for p, c in doc.get("edges", [])),
            meta={
                int(node): NodeMeta(int(m["source_class"]), m.get("local_cluster"))
                for node, m in doc.get("meta", {}).items()
            },
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HierarchyError(f"malformed hierarchy document: {exc}") from exc


def save_hierarchy(hierarchy: Hierarchy, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(hierarchy_to_dict(hierarchy), indent=2) + "\n", encoding="utf-8")
    return path


def load_hierarchy(path: PathLike) -> Hierarchy:
    return hierarchy_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_finer_assignment(assignment: FinerAssignment, path: PathLike) -> Path:
    """CSV `sample,specific_class,finer_class`, one row per sample."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    specific = assignment.specific_labels()
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ASSIGNMENT_HEADER)
        for sample, (parent, finer) in enumerate(zip(specific.tolist(), assignment.labels.tolist())):
            writer.writerow((sample, parent, finer))
    return path


def load_finer_assignment(path: PathLike) -> FinerAssignment:
    """
    Rebuild a FinerAssignment from its CSV.

    Samples must be numbered 0..N-1; every finer class must keep a single parent.
    """
    path = Path(path)
    rows: dict[int, tuple[int, int]] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != ASSIGNMENT_HEADER:
            raise LabelError(f"{path}: expected header {','.join(ASSIGNMENT_HEADER)}")
        for row in reader:
            if not row:
                continue
            try:
                sample, parent, finer = (int(c) for c in row)
            except ValueError:
                raise LabelError(f"{path}:{reader.line_num}: malformed row {row}") from None
            if sample in rows:
                raise LabelError(f"{path}:{reader.line_num}: sample {sample} listed twice")
            rows[sample] = (parent, finer)

    n_samples = len(rows)
    if sorted(rows) != list(range(n_samples)):
        raise LabelError(f"{path}: samples must be numbered 0..{n_samples - 1}")
    parents = np.array([rows[s][0] for s in range(n_samples)], dtype=np.int64)
    finer = np.array([rows[s][1] for s in range(n_samples)], dtype=np.int64)
    finer_count = int(finer.max()) + 1 if n_samples else 0
    parent_map = np.full(finer_count, -1, dtype=np.int64)
    for f, p in zip(finer.tolist(), parents.tolist()):
        if parent_map[f] not in (-1, p):
            raise HierarchyError(f"{path}: finer class {f} has parents {parent_map[f]} and {p}")
        parent_map[f] = p
    return FinerAssignment(labels=finer, finer_class_count=finer_count, parent_map=parent_map)
