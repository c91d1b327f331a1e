"""Deterministic seed derivation.

Every random stream in the package comes from ``numpy.random.PCG64`` seeded
with a 64-bit integer.  Child seeds are derived by hashing the parent seed
together with integer labels (circuit index, grid cell, ...) through
BLAKE2b, so a stream depends only on its labels and never on execution
order or thread count.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *labels: int) -> int:
    """Hash ``seed`` and ``labels`` into a new 64-bit seed."""
    payload = struct.pack(f"<{1 + len(labels)}Q", *(int(v) & MASK64 for v in (seed, *labels)))
    digest = hashlib.blake2b(payload, digest_size=8, person=b"noisebench").digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
