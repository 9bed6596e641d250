"""Seed derivation and a small order-preserving worker pool.

Every random stream is keyed by ``(seed, *labels)`` so results never depend on
how work is split across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_WORKERS = 1


def set_workers(n: int | None) -> None:
    global _WORKERS
    _WORKERS = max(1, int(n or 1))


def get_workers() -> int:
    return _WORKERS


def rng(seed: int, *labels: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(x) for x in labels]
    return np.random.default_rng(np.random.SeedSequence(key))


def env_seed(default: int = 0) -> int:
    value = os.environ.get("MARCZ_SEED")
    return int(value) if value not in (None, "") else default


def pmap(fn, items, workers: int | None = None) -> list:
    """Map ``fn`` over ``items`` keeping input order."""
    items = list(items)
    workers = workers or _WORKERS
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunked_normal(seed: int, n: int, dim: int, chunk: int = 1024, label: int = 0) -> np.ndarray:
    """``n`` standard normal rows of length ``dim``, chunk ``i`` drawn from ``rng(seed, label, i)``."""
    out = np.empty((n, dim))
    for i, start in enumerate(range(0, n, chunk)):
        stop = min(n, start + chunk)
        out[start:stop] = rng(seed, label, i).standard_normal((stop - start, dim))
    return out
