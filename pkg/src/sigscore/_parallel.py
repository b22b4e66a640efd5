"""Worker-pool plumbing for Gram computations.

SIGSCORE_THREADS caps the worker count (0 or unset = auto-detect). Results
are assembled in submission order, so the outcome is identical for any
worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import ConfigError

ENV_VAR = "SIGSCORE_THREADS"


def worker_count(requested=None) -> int:
    """Resolve the number of workers from the request or the environment."""
    if requested is None:
        raw = os.environ.get(ENV_VAR, "").strip()
        if raw == "":
            requested = 0
        else:
            try:
                requested = int(raw)
            except ValueError:
                raise ConfigError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    requested = int(requested)
    if requested < 0:
        raise ConfigError(f"worker count must be >= 0, got {requested}")
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def map_concat(fn, batch: np.ndarray, workers: int, min_per_worker: int = 8) -> np.ndarray:
    """Apply fn to chunks of batch (split on axis 0) and concatenate in order.

    Runs inline when one worker suffices; otherwise fans out to a process
    pool. fn must be a picklable module-level function.
    """
    n = batch.shape[0]
    if workers <= 1 or n < 2 * min_per_worker:
        return fn(batch)
    n_chunks = min(workers, max(1, n // min_per_worker))
    chunks = np.array_split(batch, n_chunks, axis=0)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)
