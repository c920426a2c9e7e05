"""Stable 64-bit seed derivation.

``derive_seed(seed, *parts)`` folds each part into the seed with
``h = splitmix64(h ^ stable_hash64(part))``.  Strings hash through an 8-byte
BLAKE2b digest; integers are used directly.  Derived seeds depend only on
their own inputs, so one bucket's (or one example's) draw never shifts
because other buckets or examples were added or removed.
"""

from __future__ import annotations

import hashlib
import random

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 20201208


def stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *parts: int | str) -> int:
    h = seed & MASK64
    for part in parts:
        v = stable_hash64(part) if isinstance(part, str) else part & MASK64
        h = splitmix64(h ^ v)
    return h


def rng_for(seed: int, *parts: int | str) -> random.Random:
    return random.Random(derive_seed(seed, *parts))
