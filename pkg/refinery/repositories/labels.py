"""
Label manifests: `sample,label` CSVs, multi-label sets and class-name sidecars.
"""
import csv
import logging
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from refinery.core.errors import LabelError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
LABEL_HEADER = ("sample", "label")


def _read_rows(path: Path, header: tuple[str, ...]) -> Iterator[tuple[int, list[int]]]:
    """Yield (line number, integer fields) after checking the header."""
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        first = next(reader, None)
        if first is None or tuple(c.strip() for c in first) != header:
            raise LabelError(f"{path}: expected header {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise LabelError(f"{path}:{reader.line_num}: expected {len(header)} columns")
            try:
                yield reader.line_num, [int(c) for c in row]
            except ValueError:
                raise LabelError(f"{path}:{reader.line_num}: non-integer field in {row}") from None


def load_labels(
    path: PathLike,
    n_samples: int,
    class_count: Optional[int] = None,
) -> tuple[np.ndarray, int]:
    """
    Dense 0-based labels from a `sample,label` CSV.

    Every sample must appear exactly once. class_count defaults to
    1 + max label; classes without samples are rejected.
    """
    path = Path(path)
    labels = np.full(n_samples, -1, dtype=np.int64)
    for line, (sample, label) in _read_rows(path, LABEL_HEADER):
        if not 0 <= sample < n_samples:
            raise LabelError(f"{path}:{line}: sample {sample} out of range [0, {n_samples})")
        if label < 0:
            raise LabelError(f"{path}:{line}: negative label {label}")
        if labels[sample] != -1:
            raise LabelError(f"{path}:{line}: sample {sample} listed twice")
        labels[sample] = label

    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise LabelError(f"{path}: {missing.size} samples without a label (first: {missing[0]})")

    count = class_count if class_count is not None else (int(labels.max()) + 1 if n_samples else 0)
    if n_samples and labels.max() >= count:
        raise LabelError(f"{path}: label {labels.max()} exceeds class_count {count}")
    empty = np.flatnonzero(np.bincount(labels, minlength=count) == 0)
    if empty.size:
        logger.warning("%s: label gap, classes %s have no samples", path, empty.tolist())
        raise LabelError(f"{path}: classes with zero samples: {empty.tolist()}")
    return labels, count


def save_labels(labels, path: PathLike) -> Path:
    """Write a `sample,label` CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        writer.writerows(enumerate(int(v) for v in np.asarray(labels)))
    return path


def load_label_sets(path: PathLike, n_samples: int, class_count: int) -> np.ndarray:
    """
    Boolean relevance matrix (n_samples x class_count) from a multi-label CSV.

    Rows are `sample,label`; a sample may appear several times.
    """
    path = Path(path)
    relevance = np.zeros((n_samples, class_count), dtype=bool)
    for line, (sample, label) in _read_rows(path, LABEL_HEADER):
        if not 0 <= sample < n_samples:
            raise LabelError(f"{path}:{line}: sample {sample} out of range [0, {n_samples})")
        if not 0 <= label < class_count:
            raise LabelError(f"{path}:{line}: label {label} out of range [0, {class_count})")
        relevance[sample, label] = True
    return relevance


def save_label_sets(relevance: np.ndarray, path: PathLike) -> Path:
    """Write a relevance matrix as a multi-label CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples, labels = np.nonzero(np.asarray(relevance, dtype=bool))
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        writer.writerows(zip(samples.tolist(), labels.tolist()))
    return path


def load_class_names(path: PathLike, class_count: Optional[int] = None) -> list[str]:
    """One class name per line; line i names class i."""
    names = Path(path).read_text(encoding="utf-8").splitlines()
    while names and not names[-1].strip():
        names.pop()
    if class_count is not None and len(names) != class_count:
        raise LabelError(f"{path}: {len(names)} names for {class_count} classes")
    return names


def save_class_names(names: list[str], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{name}\n" for name in names), encoding="utf-8")
    return path
