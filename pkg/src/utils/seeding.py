"""Seed derivation utilities.

Every random sub-task (topology, rates, initial state, sampled sign patterns,
verification ensembles) draws from its own stream. Stream seeds are derived
from the scenario seed with splitmix64, mixing in a blake2b hash of each
label, so results are stable across platforms and independent of call order.
"""

import hashlib

import numpy as np

from src.models.entities import State

MASK64 = (1 << 64) - 1


class SeedGenerator:
    """Derives labelled sub-seeds and numpy generators from a 64-bit seed."""

    @staticmethod
    def splitmix64(value: int) -> int:
        """One splitmix64 output for state `value`."""
        z = (value + 0x9E3779B97F4A7C15) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    @staticmethod
    def label_hash(label) -> int:
        digest = hashlib.blake2b(str(label).encode('utf-8'), digest_size=8).digest()
        return int.from_bytes(digest, 'little')

    @staticmethod
    def derive(seed: int, *labels) -> int:
        """Sub-seed for the stream named by `labels` (e.g. ("rates", attempt))."""
        state = SeedGenerator.splitmix64(int(seed) & MASK64)
        for label in labels:
            state = SeedGenerator.splitmix64(state ^ SeedGenerator.label_hash(label))
        return state

    @staticmethod
    def rng(seed: int, *labels) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(SeedGenerator.derive(seed, *labels)))

    @staticmethod
    def sample_state(rng: np.random.Generator, n: int) -> State:
        """Uniform state in [0,1]^n x [-0.5,0.5]^n with x != 0."""
        x = rng.uniform(0.0, 1.0, size=n)
        if not np.any(x > 0):
            x[int(rng.integers(n))] = 0.5
        return State(x, rng.uniform(-0.5, 0.5, size=n))
