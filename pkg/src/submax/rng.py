"""Seed derivation and random generators.

All randomness flows from 64-bit integer seeds. Child seeds are derived with
a splitmix64 chain over (master, key, key, ...) so that every restart, trial
and matrix draws from its own stream regardless of execution order. Streams
are Philox (counter-based) generators; normals come from numpy's ziggurat
sampler, row-major.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import InvalidArgumentError

MASK64 = (1 << 64) - 1


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise InvalidArgumentError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InvalidArgumentError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _key_value(key) -> int:
    if isinstance(key, str):
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
        return int(key) & MASK64
    raise InvalidArgumentError(f"seed keys must be str or int, got {key!r}")


def derive_seed(master, *keys) -> int:
    """Hash ``master`` together with ``keys`` into a child 64-bit seed."""
    state = check_seed(master)
    for key in keys:
        state = splitmix64(state ^ splitmix64(_key_value(key)))
    return state


def split(master, i: int) -> int:
    """Seed of restart/trial ``i`` under ``master``."""
    return derive_seed(master, i)


def generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(check_seed(seed)))
