"""Seed derivation and random streams.

Every random quantity in a run is drawn from a Philox generator keyed by a
64-bit seed.  Seeds are derived from a single root seed with :func:`derive_seed`,
so clients and the parameter server only need to share the root.

Derivation: the parts ``(root, *labels)`` are rendered with ``repr`` and joined
by ``"/"``; the UTF-8 bytes are hashed with BLAKE2b (8-byte digest) and the
digest is read as a little-endian unsigned integer.  For example the projection
matrix of round ``t`` uses ``derive_seed(root, "rpm", t)``.  Philox output is
platform independent, so a given seed yields the same stream everywhere.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(root: int, *labels: object) -> int:
    """Derive a 64-bit child seed from ``root`` and a label path."""
    text = "/".join(repr(p) for p in (int(root) & SEED_MASK, *labels))
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & SEED_MASK))


def stream(root: int, *labels: object) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under ``root``."""
    return make_rng(derive_seed(root, *labels))
