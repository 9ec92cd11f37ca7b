"""Replication engine with deterministic ordered reduction.

Replications are grouped in fixed-size blocks; block ``i`` always draws
from ``RandomStream(seed, i)`` whatever the worker count, and block
results are concatenated in block order.  Output therefore depends only on
the seed, the replication count and the block size.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import DomainError
from ..numerics import RandomStream
from .scenario import RunReport

DEFAULT_BLOCK = 1000
Z95 = 1.96


def block_sizes(reps: int, block: int = DEFAULT_BLOCK):
    if reps < 1 or block < 1:
        raise DomainError("replications and block size must be >= 1")
    full, rest = divmod(reps, block)
    return [block] * full + ([rest] if rest else [])


def run_blocks(fn, reps: int, seed: int, workers: int = 1, block: int = DEFAULT_BLOCK):
    """Evaluate ``fn(stream, n) -> array of n values`` over all blocks.

    Returns the concatenated per-replication values, ordered by block.
    """
    sizes = block_sizes(reps, block)
    jobs = [(RandomStream(seed, i), n) for i, n in enumerate(sizes)]

    def one(job):
        stream, n = job
        out = np.asarray(fn(stream, n), dtype=float)
        if out.shape[0] != n:
            raise DomainError("replication function returned the wrong number of values")
        return out

    if workers <= 1 or len(jobs) == 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))  # map keeps submission order
    return np.concatenate(parts)


def summarize(metric: str, values, seed: int, analytic=None, wall_time=0.0) -> RunReport:
    values = np.asarray(values, dtype=float)
    n = len(values)
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if n > 1 else 0.0
    ci = Z95 * math.sqrt(var / n)
    return RunReport(metric, mean, var, n, ci, int(seed), dict(analytic or {}), wall_time)


def estimate(metric: str, fn, reps: int, seed: int, workers: int = 1, analytic=None,
             block: int = DEFAULT_BLOCK) -> RunReport:
    t0 = time.perf_counter()
    values = run_blocks(fn, reps, seed, workers=workers, block=block)
    return summarize(metric, values, seed, analytic, time.perf_counter() - t0)
