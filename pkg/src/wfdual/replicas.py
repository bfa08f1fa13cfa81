"""Replica pool: run per-replica workers with replica-indexed seeding.

Results come back ordered by replica index and are reduced in that order,
so the outcome is independent of the worker count.  Workers are processes
(the inner loops are pure Python); with threads=1 everything runs inline.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_THREADS = "WFDUAL_THREADS"


def resolve_threads(threads: int | None) -> int:
    env = os.environ.get(ENV_THREADS)
    if env:
        return max(1, int(env))
    if threads is None:
        return 1
    return max(1, int(threads))


def _chunk(fn, lo, hi, args):
    return [fn(i, *args) for i in range(lo, hi)]


def map_replicas(fn, reps: int, *, threads: int | None = 1, args=()):
    """[fn(i, *args) for i in range(reps)], possibly fanned out to workers."""
    threads = resolve_threads(threads)
    if threads <= 1 or reps < 2 * threads:
        return [fn(i, *args) for i in range(reps)]
    bounds = [(reps * k) // threads for k in range(threads + 1)]
    out = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_chunk, fn, lo, hi, args)
                   for lo, hi in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            out.extend(fut.result())
    return out
