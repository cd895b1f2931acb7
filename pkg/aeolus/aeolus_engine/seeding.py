"""
Seeding Module

Every random stream of a run is derived from the root seed by a labeled split, so adding a stream
never shifts another one. The derivation is frozen: BLAKE2b with an 8-byte digest over the UTF-8
text "<root>:<label>", read as an unsigned little-endian integer.

Functions:
    seed_split(): Derived 64-bit seed for a label.
    stream(): NumPy generator seeded by `seed_split()`.
"""

import hashlib

import numpy as np


def seed_split(root_seed: int, label: str) -> int:
    """Stable 64-bit seed for (`root_seed`, `label`)."""
    digest = hashlib.blake2b(f"{int(root_seed)}:{label}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(root_seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(seed_split(root_seed, label))
