"""Deterministic substream derivation: all randomness flows from one seed."""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *keys) -> np.random.Generator:
    """Generator keyed by (seed, *keys) via a stable hash.

    Python's builtin hash is salted per process, so reports would not be
    reproducible across runs; blake2b of the repr is stable everywhere.
    """
    tag = repr((int(seed),) + tuple(keys)).encode()
    digest = hashlib.blake2b(tag, digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def unit_directions(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """Uniform directions on the unit sphere."""
    v = rng.normal(size=(count, dim))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms
