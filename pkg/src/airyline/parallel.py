"""Replica scheduler.

Replica ``i`` always draws from ``base.child(i)`` and results are merged by
replica index, so output is identical for any thread count or chunk size.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .rng import RngStream


def replica_streams(base: RngStream, n: int, offset: int = 0) -> list[RngStream]:
    return [base.child(i) for i in range(offset, offset + n)]


def run_replicas(fn: Callable[[Sequence[RngStream]], Sequence], n: int, base: RngStream,
                 threads: int = 1, chunk: int = 256) -> list:
    """Apply ``fn`` to chunks of replica streams and concatenate in replica order.

    ``fn`` receives a list of streams and returns one result per stream (a
    list or an array whose first axis runs over the streams).
    """
    streams = replica_streams(base, n)
    parts = [streams[i:i + chunk] for i in range(0, n, chunk)]
    if threads <= 1 or len(parts) <= 1:
        results = [fn(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, parts))
    out = []
    for r in results:
        out.extend(list(r))
    return out


def run_replicas_array(fn, n: int, base: RngStream, threads: int = 1, chunk: int = 256) -> np.ndarray:
    return np.asarray(run_replicas(fn, n, base, threads, chunk))
