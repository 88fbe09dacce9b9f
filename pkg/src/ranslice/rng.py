"""Deterministic named substreams derived from one master seed.

Python's built-in hash() is salted per process, so stream labels are folded
into the seed with FNV-1a instead, which is stable across runs, platforms and
processes.  Every stochastic part of a scenario (arrivals, attributes,
incumbent, exploration, Q-table init, random allocator) pulls from its own
substream, so changing one consumer never perturbs the others.
"""

from __future__ import annotations

import random

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def derive_seed(master_seed: int, label: str, *parts: int) -> int:
    """Mix a master seed with a stream label (and optional indices) into a new seed."""
    h = _fnv1a(int(master_seed & _MASK64).to_bytes(8, "little"))
    h = _fnv1a(label.encode("utf-8"), h)
    for p in parts:
        h = _fnv1a(int(p & _MASK64).to_bytes(8, "little"), h)
    return h & 0x7FFFFFFFFFFFFFFF


def substream(master_seed: int, label: str, *parts: int) -> random.Random:
    """A random.Random seeded from (master_seed, label, *parts)."""
    return random.Random(derive_seed(master_seed, label, *parts))
