"""Deterministic chunked execution.

Work is cut into chunks whose boundaries depend only on the number of
trials, never on the worker count. Each chunk writes into its own slice and
results are combined in chunk order, so output is identical for any
``threads`` value. The compiled kernels release the GIL, which lets a thread
pool use several cores.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

CHUNK_SIZE = 4096


def resolve_threads(threads: int | None = None) -> int:
    """Worker count from the argument, else ``ENGINE_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("ENGINE_THREADS")
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def chunk_bounds(n: int, chunk_size: int = CHUNK_SIZE):
    return [(s, min(n, s + chunk_size)) for s in range(0, n, chunk_size)]


def run_chunks(fn, n: int, threads: int | None = None,
               chunk_size: int = CHUNK_SIZE):
    """Call ``fn(start, stop)`` for every chunk; return results in order."""
    bounds = chunk_bounds(n, chunk_size)
    workers = min(resolve_threads(threads), max(1, len(bounds)))
    if workers == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, a, b) for a, b in bounds]
        return [f.result() for f in futures]
