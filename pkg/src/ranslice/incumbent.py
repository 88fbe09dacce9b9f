"""Incumbent (radar) occupancy of frequency blocks.

Two arrival patterns: independent per-slot coin flips per block, and on/off
sessions whose on-durations are uniform integers in [10, 50] slots with the
off-rate calibrated so the long-run occupied fraction matches the target
probability.  Masked blocks cannot be newly allocated; blocks already held by
grants keep running (no preemption).
"""

from __future__ import annotations

import random
from typing import Sequence

OccupancyMask = list[bool]

SESSION_LIFETIME_RANGE = (10, 50)


def iid_mask(rng: random.Random, p_i: float, n_blocks: int) -> OccupancyMask:
    """Fresh mask with each block independently occupied with probability p_i."""
    if not 0.0 <= p_i <= 1.0:
        raise ValueError("p_i must be in [0, 1]")
    return [rng.random() < p_i for _ in range(n_blocks)]


class SessionProcess:
    """Per-block on/off renewal process targeting occupancy probability p_i.

    Off-periods are geometric with per-slot start rate q = p_i / ((1 - p_i) *
    E[L]); with on-durations uniform in [10, 50] (E[L] = 30) the stationary
    occupied fraction is exactly p_i.  p_i = 1 has no finite off-rate and is
    rejected.  Per step, blocks are visited in index order; an occupied block
    consumes no randomness, an idle block consumes one uniform draw plus one
    lifetime draw when a session starts.
    """

    def __init__(
        self,
        p_i: float,
        n_blocks: int,
        lifetime_range: tuple[int, int] = SESSION_LIFETIME_RANGE,
    ) -> None:
        if not 0.0 <= p_i < 1.0:
            raise ValueError("session pattern requires 0 <= p_i < 1")
        lo, hi = lifetime_range
        if not 1 <= lo <= hi:
            raise ValueError("lifetime_range must satisfy 1 <= lo <= hi")
        self.p_i = p_i
        self.lifetime_range = (lo, hi)
        mean_lifetime = (lo + hi) / 2
        self.q = p_i / ((1.0 - p_i) * mean_lifetime) if p_i > 0 else 0.0
        self.on = [False] * n_blocks
        self.remaining = [0] * n_blocks

    def step(self, rng: random.Random) -> OccupancyMask:
        """Advance one slot and return the current mask."""
        lo, hi = self.lifetime_range
        for b in range(len(self.on)):
            if self.on[b]:
                self.remaining[b] -= 1
                if self.remaining[b] <= 0:
                    self.on[b] = False
            elif rng.random() < self.q:
                self.on[b] = True
                self.remaining[b] = rng.randint(lo, hi)
        return list(self.on)


def apply_mask(pool, mask: Sequence[bool]) -> None:
    """Mark masked blocks unallocatable for this slot.

    Blocks held by active grants are unaffected: the pool's availability view
    excludes them anyway, and they return to circulation only when released
    while unmasked.  Free counts can never go negative.
    """
    if len(mask) != len(pool.block_masked):
        raise ValueError(f"mask length {len(mask)} != block count {len(pool.block_masked)}")
    pool.block_masked = [bool(x) for x in mask]
