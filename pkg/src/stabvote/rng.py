"""Counter-based random streams for reproducible Monte Carlo.

Samples are cut into fixed-size blocks. Block ``b`` of a run seeded with
``seed`` always draws from the Philox stream keyed by (seed, b), so the
result is the same whether blocks run serially or on any number of threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1 << 16
THREADS_ENV = "STABVOTE_THREADS"


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def blocks(samples: int, block: int = BLOCK):
    """(index, size) pairs covering ``samples`` draws."""
    return [(b, min(block, samples - start)) for b, start in enumerate(range(0, samples, block))]


def run_blocks(worker, samples: int, seed: int, threads=None, block: int = BLOCK):
    """Call ``worker(rng, size)`` per block; results are returned in block order."""
    threads = threads or default_threads()
    jobs = blocks(samples, block)

    def one(job):
        b, size = job
        return worker(block_rng(seed, b), size)

    if threads <= 1 or len(jobs) <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, jobs))
