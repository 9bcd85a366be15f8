"""Deterministic stream derivation on top of the Philox counter-based generator.

Every random decision in the toolkit draws from a Philox4x64 stream whose
128-bit key is the SHA-256 hash of the governing seed plus a tuple of string
context parts (e.g. ("severity", "PLY")).  Keys never collide in practice and
the derivation is platform-independent, so any (seed, context) pair yields
the same byte stream everywhere.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(seed: int, *parts) -> int:
    """128-bit Philox key from a 64-bit seed and string-able context parts."""
    h = hashlib.sha256()
    h.update(int(seed).to_bytes(8, "little", signed=False))
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode("utf-8"))
    return int.from_bytes(h.digest()[:16], "little")


def derive_seed(seed: int, *parts) -> int:
    """64-bit sub-seed, e.g. the per-image seed recorded in recipe logs."""
    return derive_key(seed, *parts) & 0xFFFFFFFFFFFFFFFF


def stream(seed: int, *parts) -> np.random.Generator:
    """Independent generator for the given seed and context."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *parts)))
