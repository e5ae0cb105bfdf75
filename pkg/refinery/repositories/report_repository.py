"""
JSON reports and plot-ready CSV tables.
"""
import csv
import json
from pathlib import Path
from typing import Iterable, Sequence, Type, TypeVar, Union

from pydantic import BaseModel

PathLike = Union[str, Path]
M = TypeVar("M", bound=BaseModel)


def save_report(report: BaseModel, path: PathLike) -> Path:
    """Canonical JSON (sorted keys, two-space indent) so reruns diff cleanly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True)
    path.write_text(body + "\n", encoding="utf-8")
    return path


def load_report(model: Type[M], path: PathLike) -> M:
    return model.model_validate_json(Path(path).read_text(encoding="utf-8"))


def save_json(document, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def format_number(value) -> str:
    """Shortest round-tripping text for floats; ints unchanged."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def save_table(
    path: PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence],
    comments: Sequence[str] = (),
) -> Path:
    """CSV with optional leading `# ` comment lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path
