"""
Deterministic RNG streams and the shared worker pool.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

import numpy as np

from refinery.core.config import settings

T = TypeVar("T")
R = TypeVar("R")


def derive_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    """Seed sequence for the stream identified by (seed, *keys)."""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, *keys); scheduling-order free."""
    return np.random.default_rng(derive_seed(seed, *keys))


def derive_int(seed: int, *keys: int) -> int:
    """63-bit integer seed for a child stream."""
    return int(derive_seed(seed, *keys).generate_state(1, dtype=np.uint64)[0] >> 1)


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: Optional[int] = None,
) -> list[R]:
    """Apply fn to every item; results keep input order."""
    items = list(items)
    workers = threads or settings.worker_count
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
