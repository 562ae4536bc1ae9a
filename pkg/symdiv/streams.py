"""
Random Streams - counter-based, splittable generators

Every random draw in symdiv goes through a Philox generator keyed by a
SeedSequence, so a stream is a pure function of (seed, keys) and never of
execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK_64b = 0xFFFFFFFFFFFFFFFF


def _entropy(seed: int, keys: tuple) -> list:
    entropy = [int(seed) & MASK_64b]
    for key in keys:
        key = int(key)
        if key < 0:
            raise ValueError(f"stream keys must be non-negative, got {key}")
        entropy.append(key)
    return entropy


def generator(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for the stream (seed, *keys)."""
    sequence = np.random.SeedSequence(_entropy(seed, keys))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit seed of the child stream (seed, *keys)."""
    sequence = np.random.SeedSequence(_entropy(seed, keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def name_key(name: str) -> int:
    """Stable integer key for a string (experiment labels)."""
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
