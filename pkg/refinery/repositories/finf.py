"""
Binary feature files (FINF) and named-tensor checkpoint containers (FINC).

FINF layout, little-endian:
- bytes 0-3   magic b"FINF"
- bytes 4-7   version u32 (= 1)
- bytes 8-15  n_samples u64
- bytes 16-19 dim u32
- bytes 20-23 reserved u32 (= 0)
- payload     n_samples * dim float32, row-major

FINC layout, little-endian:
- bytes 0-3   magic b"FINC"
- bytes 4-7   version u32 (= 1)
- bytes 8-11  tensor count u32
- bytes 12-15 metadata length u32, followed by UTF-8 JSON metadata
- per tensor: name length u16, name, ndim u32, ndim x u64 shape,
  then the float64 payload
"""
import json
import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from refinery.core.errors import (
    FeatureFormatError,
    NonFiniteError,
    ShapeError,
    TruncatedFileError,
)
from refinery.models.dataset import FeatureMatrix

logger = logging.getLogger(__name__)

FINF_MAGIC = b"FINF"
FINC_MAGIC = b"FINC"
FORMAT_VERSION = 1

_FINF_HEADER = struct.Struct("<4sIQII")
_FINC_HEADER = struct.Struct("<4sIII")
_FLOAT32 = np.dtype("<f4")
_FLOAT64 = np.dtype("<f8")

PathLike = Union[str, Path]


def encode_features(matrix: Union[FeatureMatrix, np.ndarray]) -> bytes:
    """FINF bytes for a matrix; rejects values that are not finite in float32."""
    values = matrix.values if isinstance(matrix, FeatureMatrix) else np.asarray(matrix)
    if values.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("refusing to write NaN or Inf features")
    payload = values.astype(_FLOAT32)
    if not np.all(np.isfinite(payload)):
        raise NonFiniteError("features overflow float32")
    n_samples, dim = values.shape
    header = _FINF_HEADER.pack(FINF_MAGIC, FORMAT_VERSION, n_samples, dim, 0)
    return header + np.ascontiguousarray(payload).tobytes()


def decode_features(raw: bytes, source: str = "<bytes>") -> FeatureMatrix:
    """Parse FINF bytes."""
    if len(raw) < 4 or raw[:4] != FINF_MAGIC:
        raise FeatureFormatError(f"{source}: missing FINF magic")
    if len(raw) < _FINF_HEADER.size:
        raise TruncatedFileError(f"{source}: header is {len(raw)} bytes, expected {_FINF_HEADER.size}")
    _, version, n_samples, dim, reserved = _FINF_HEADER.unpack_from(raw)
    if version != FORMAT_VERSION:
        raise FeatureFormatError(f"{source}: unsupported FINF version {version}")
    if reserved != 0:
        raise FeatureFormatError(f"{source}: reserved header field is {reserved}, expected 0")

    expected = n_samples * dim * _FLOAT32.itemsize
    payload = raw[_FINF_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedFileError(
            f"{source}: payload has {len(payload)} bytes, header declares {expected}"
        )
    if len(payload) > expected:
        raise FeatureFormatError(f"{source}: {len(payload) - expected} trailing bytes after payload")

    if expected == 0:
        return FeatureMatrix(np.zeros((n_samples, dim)))
    values = np.frombuffer(payload, dtype=_FLOAT32, count=n_samples * dim).reshape(n_samples, dim)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{source}: payload contains NaN or Inf")
    return FeatureMatrix(values.astype(np.float64))


def save_features(matrix: Union[FeatureMatrix, np.ndarray], path: PathLike) -> Path:
    """Write a feature matrix as FINF."""
    path = Path(path)
    data = encode_features(matrix)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.debug("wrote %s (%d bytes)", path, len(data))
    return path


def load_features(path: PathLike) -> FeatureMatrix:
    """Read a FINF feature file."""
    path = Path(path)
    return decode_features(path.read_bytes(), source=str(path))


def save_tensors(tensors: dict[str, np.ndarray], path: PathLike, metadata: dict | None = None) -> Path:
    """Write named float64 tensors plus JSON metadata as FINC."""
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    chunks = [_FINC_HEADER.pack(FINC_MAGIC, FORMAT_VERSION, len(tensors), len(meta)), meta]
    for name, tensor in tensors.items():
        array = np.asarray(tensor, dtype=_FLOAT64)
        if not np.all(np.isfinite(array)):
            raise NonFiniteError(f"tensor {name!r} contains NaN or Inf")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack(f"<I{array.ndim}Q", array.ndim, *array.shape))
        chunks.append(np.ascontiguousarray(array).tobytes())

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    return path


def load_tensors(path: PathLike) -> tuple[dict[str, np.ndarray], dict]:
    """Read a FINC container; returns (tensors, metadata)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != FINC_MAGIC:
        raise FeatureFormatError(f"{path}: missing FINC magic")
    reader = _Reader(raw, str(path))
    _, version, count, meta_len = reader.unpack(_FINC_HEADER)
    if version != FORMAT_VERSION:
        raise FeatureFormatError(f"{path}: unsupported FINC version {version}")
    metadata = json.loads(reader.take(meta_len).decode("utf-8"))

    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack(struct.Struct("<H"))
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack(struct.Struct("<I"))
        shape = reader.unpack(struct.Struct(f"<{ndim}Q")) if ndim else ()
        size = int(np.prod(shape, dtype=np.int64))
        payload = reader.take(size * _FLOAT64.itemsize)
        if size == 0:
            tensors[name] = np.zeros(shape)
        else:
            tensors[name] = np.frombuffer(payload, dtype=_FLOAT64).reshape(shape).copy()
    if reader.remaining:
        raise FeatureFormatError(f"{path}: {reader.remaining} trailing bytes")
    return tensors, metadata


class _Reader:
    """Cursor over a byte buffer that reports truncation."""

    def __init__(self, raw: bytes, source: str):
        self.raw = raw
        self.source = source
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.raw) - self.offset

    def take(self, n: int) -> bytes:
        if n > self.remaining:
            raise TruncatedFileError(f"{self.source}: needed {n} bytes at offset {self.offset}")
        chunk = self.raw[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))
