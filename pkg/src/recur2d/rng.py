"""Deterministic per-trajectory random streams.

Every Monte Carlo driver in this package assigns trajectory `i` its own
generator derived from ``(master_seed, i)``.  Results are then functions of
the (seed, index) pairs alone: chunking, scheduling, and worker counts cannot
change a single draw.

The stream family is splitmix64: stream `i` starts from
``mix64(master + (i+1)*GAMMA)`` and advances by the usual weyl increment.
This module holds the pure-Python reference implementation (used for seeding
numpy generators and in tests); the jit kernels carry an identical copy that
is verified against this one.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """Finalization mix of splitmix64 (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_seed(master_seed: int, index: int) -> int:
    """64-bit starting state of trajectory `index` under `master_seed`."""
    return mix64((master_seed + (index + 1) * GAMMA) & MASK64)


class SplitMix64:
    """Reference splitmix64 stream. Matches the jit implementation bit for bit."""

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    @classmethod
    def for_trajectory(cls, master_seed: int, index: int) -> "SplitMix64":
        return cls(stream_seed(master_seed, index))

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def next_double(self) -> float:
        # 53 high bits -> [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53


def numpy_generator(master_seed: int, *spawn_key: int) -> np.random.Generator:
    """numpy Generator for non-jit sampling paths, keyed like the jit streams."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(ss))


def chunk_ranges(n: int, workers: int) -> list[tuple[int, int]]:
    """Deterministic partition of range(n) into up to `workers` contiguous chunks.

    Work dispatched per chunk lands in per-index slots, so the partition can
    never change a result; it only bounds how much is in flight at once.
    """
    if n <= 0:
        return []
    workers = max(1, int(workers))
    size = (n + workers - 1) // workers
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]
