"""Seeded random streams and block-parallel Monte Carlo plumbing.

A stream is identified by ``(seed, stream_id)``. Work is cut into fixed-size
blocks; block ``b`` draws from ``SeedSequence(seed, spawn_key=(stream_id, b))``.
Because the block layout depends only on the sample count, results are the
same whatever number of worker threads processes the blocks.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

MASK64 = (1 << 64) - 1
DEFAULT_BLOCK = 4096
THREADS_ENV = "KACMAX_THREADS"


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) <= MASK64:
                raise InvalidInputError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self, block=None):
        """numpy Generator for the whole stream or for one block of it."""
        key = (int(self.stream_id),) if block is None else (int(self.stream_id), int(block))
        seq = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, index):
        """Independent stream derived from this one (for nested experiments)."""
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), 1 << 32, int(index)))
        return RngStream(int(self.seed), int(seq.generate_state(1, np.uint64)[0]))


def as_stream(rng):
    """Accept an RngStream, a bare integer seed, or None (seed 0)."""
    if rng is None:
        return RngStream(0)
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise InvalidInputError(f"cannot build a random stream from {rng!r}")


def resolve_threads(threads=None):
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def block_sizes(total, block=DEFAULT_BLOCK):
    full, rest = divmod(int(total), int(block))
    return [block] * full + ([rest] if rest else [])


def map_blocks(fn, total, rng, threads=None, block=DEFAULT_BLOCK):
    """Run ``fn(generator, size)`` over fixed blocks and return results in block order."""
    stream = as_stream(rng)
    sizes = block_sizes(total, block)
    jobs = [(b, size) for b, size in enumerate(sizes)]
    threads = resolve_threads(threads)

    def run(job):
        b, size = job
        return fn(stream.generator(b), size)

    if threads == 1 or len(jobs) <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, jobs))
