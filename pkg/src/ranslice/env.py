"""Per-gNodeB world state: arrivals, deadline queue, grants and bookkeeping.

Time advances in fixed slots.  Within a slot the order is frozen: release
finished grants, expire overdue requests, refresh the incumbent mask, enqueue
new arrivals, let the allocator run, then advance the clock.  A grant made at
slot t with lifetime l occupies its resources over [t, t + l) and is released
at the top of slot t + l, before that slot's allocations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

from .incumbent import apply_mask
from .phy import Bundle

if TYPE_CHECKING:
    from .config import ScenarioConfig


class CapacityError(RuntimeError):
    """An allocator tried to grant a bundle the pool cannot currently hold."""


@dataclass(frozen=True)
class SliceRequest:
    """One UE's slice request.

    req_id is the arrival slot, which is unique per UE because each UE files
    at most one request per slot.  deadline counts slots from arrival until
    service must have started; lifetime is the service duration once granted.
    """

    ue_id: int
    req_id: int
    weight: int
    demand_rate: float
    cpu_demand: int
    deadline: int
    lifetime: int
    arrival_slot: int

    def __post_init__(self) -> None:
        if self.weight < 1:
            raise ValueError("weight must be >= 1")
        if self.cpu_demand < 0:
            raise ValueError("cpu_demand must be >= 0")
        if self.deadline < 1:
            raise ValueError("deadline must be >= 1")
        if self.lifetime < 1:
            raise ValueError("lifetime must be >= 1")


class ResourcePool:
    """Free frequency blocks, CPU levels and transmit-power units at one gNodeB.

    A block is allocatable when no active grant holds it and the incumbent
    mask does not cover it.  CPU and power are plain counters untouched by
    the incumbent.
    """

    def __init__(self, n_blocks: int, cpu_capacity: int, power_capacity: int) -> None:
        if min(n_blocks, cpu_capacity, power_capacity) < 1:
            raise ValueError("pool capacities must be >= 1")
        self.n_blocks = n_blocks
        self.cpu_capacity = cpu_capacity
        self.power_capacity = power_capacity
        self.block_granted = [False] * n_blocks
        self.block_masked = [False] * n_blocks
        self.cpu_free = cpu_capacity
        self.power_free = power_capacity

    @property
    def block_free(self) -> list[bool]:
        return [not g and not m for g, m in zip(self.block_granted, self.block_masked)]

    @property
    def free_blocks(self) -> int:
        return sum(1 for g, m in zip(self.block_granted, self.block_masked) if not g and not m)

    @property
    def masked_blocks(self) -> int:
        """Blocks the incumbent currently occupies, whether granted or not."""
        return sum(self.block_masked)

    @property
    def masked_unallocated(self) -> int:
        """Masked blocks not held by any grant (the ones removed from the free count)."""
        return sum(1 for g, m in zip(self.block_granted, self.block_masked) if m and not g)

    def take_blocks(self, k: int) -> tuple[int, ...]:
        """Claim the k lowest-indexed allocatable blocks."""
        ids: list[int] = []
        for i in range(self.n_blocks):
            if not self.block_granted[i] and not self.block_masked[i]:
                ids.append(i)
                if len(ids) == k:
                    break
        if len(ids) < k:
            raise CapacityError(f"need {k} free blocks, only {len(ids)} available")
        for i in ids:
            self.block_granted[i] = True
        return tuple(ids)

    def return_blocks(self, ids: Iterable[int]) -> None:
        for i in ids:
            self.block_granted[i] = False


@dataclass(frozen=True)
class Grant:
    """An admitted request bound to concrete resources over [start_slot, end_slot)."""

    request: SliceRequest
    bundle: Bundle
    block_ids: tuple[int, ...]
    start_slot: int
    end_slot: int


@dataclass
class SlotStats:
    """What one slot did; feeds metrics and the resource-update identities."""

    slot: int
    released: tuple[int, int, int]
    allocated: tuple[int, int, int]
    expired: list[SliceRequest]
    grants: list[Grant]
    incumbent_blocks: int


class EnvState:
    """Mutable simulation state for a single gNodeB."""

    def __init__(
        self,
        n_blocks: int = 11,
        cpu_levels: int = 50,
        power_budget: int = 10,
        n_ues: int = 3,
        debug_checks: bool = False,
    ) -> None:
        self.slot = 0
        self.pool = ResourcePool(n_blocks, cpu_levels, power_budget)
        self.queue: list[SliceRequest] = []
        self.active: list[Grant] = []
        self.cum_utility = 0
        self.arrived = 0
        self.granted = 0
        self.expired = 0
        self.served_per_ue = [0] * n_ues
        self.debug_checks = debug_checks
        self._slot_allocated = [0, 0, 0]

    def apply_grant(self, request: SliceRequest, bundle: Bundle) -> Grant:
        """Commit a bundle to a request: claim resources, book utility.

        The caller is responsible for bundle adequacy (rate and CPU); this
        method enforces fit only.  A zero-block bundle is rejected because
        every grant must occupy at least one block.
        """
        if bundle.num_blocks < 1:
            raise ValueError("a grant must allocate at least one block")
        pool = self.pool
        if (
            bundle.num_blocks > pool.free_blocks
            or bundle.cpu_levels > pool.cpu_free
            or bundle.power_level > pool.power_free
        ):
            raise CapacityError(
                f"bundle {bundle} does not fit free ({pool.free_blocks} blocks, "
                f"{pool.cpu_free} cpu, {pool.power_free} power)"
            )
        block_ids = pool.take_blocks(bundle.num_blocks)
        pool.cpu_free -= bundle.cpu_levels
        pool.power_free -= bundle.power_level
        grant = Grant(
            request=request,
            bundle=bundle,
            block_ids=block_ids,
            start_slot=self.slot,
            end_slot=self.slot + request.lifetime,
        )
        self.active.append(grant)
        self.cum_utility += request.weight
        self.granted += 1
        self.served_per_ue[request.ue_id] += 1
        if request in self.queue:
            self.queue.remove(request)
        self._slot_allocated[0] += bundle.num_blocks
        self._slot_allocated[1] += bundle.cpu_levels
        self._slot_allocated[2] += bundle.power_level
        return grant

    def release_completed(self) -> tuple[int, int, int]:
        """Return resources of every grant whose end slot has arrived."""
        ending = [g for g in self.active if g.end_slot <= self.slot]
        if not ending:
            return (0, 0, 0)
        self.active = [g for g in self.active if g.end_slot > self.slot]
        blocks = cpu = power = 0
        for g in ending:
            self.pool.return_blocks(g.block_ids)
            self.pool.cpu_free += g.bundle.cpu_levels
            self.pool.power_free += g.bundle.power_level
            blocks += g.bundle.num_blocks
            cpu += g.bundle.cpu_levels
            power += g.bundle.power_level
        return (blocks, cpu, power)

    def expire_deadlines(self) -> list[SliceRequest]:
        """Drop queued requests that have waited deadline slots or more."""
        overdue = [r for r in self.queue if self.slot - r.arrival_slot >= r.deadline]
        if overdue:
            self.queue = [r for r in self.queue if self.slot - r.arrival_slot < r.deadline]
            self.expired += len(overdue)
        return overdue

    def advance_slot(
        self,
        new_arrivals: Sequence[SliceRequest],
        *,
        allocate: Callable[["EnvState"], list[Grant]] | None = None,
        next_mask: Sequence[bool] | None = None,
    ) -> SlotStats:
        """Run one slot in the fixed order and advance the clock.

        next_mask None leaves the incumbent mask unchanged (used for the
        pattern-free case and by tests that drive phases manually).
        """
        self._slot_allocated = [0, 0, 0]
        released = self.release_completed()
        expired = self.expire_deadlines()
        if next_mask is not None:
            apply_mask(self.pool, next_mask)
        self.queue.extend(new_arrivals)
        self.arrived += len(new_arrivals)
        grants = list(allocate(self)) if allocate is not None else []
        if self.debug_checks:
            self.check_invariants()
        stats = SlotStats(
            slot=self.slot,
            released=released,
            allocated=tuple(self._slot_allocated),
            expired=expired,
            grants=grants,
            incumbent_blocks=self.pool.masked_blocks,
        )
        self.slot += 1
        return stats

    def check_invariants(self) -> None:
        """Raise RuntimeError if conservation or queue invariants are broken."""
        pool = self.pool
        held = [b for g in self.active for b in g.block_ids]
        if len(held) != len(set(held)):
            raise RuntimeError("block overlap between active grants")
        flagged = {i for i in range(pool.n_blocks) if pool.block_granted[i]}
        if flagged != set(held):
            raise RuntimeError("granted-block flags out of sync with active grants")
        if pool.free_blocks != pool.n_blocks - len(held) - pool.masked_unallocated:
            raise RuntimeError("block conservation violated")
        if pool.cpu_free != pool.cpu_capacity - sum(g.bundle.cpu_levels for g in self.active):
            raise RuntimeError("cpu conservation violated")
        if pool.power_free != pool.power_capacity - sum(g.bundle.power_level for g in self.active):
            raise RuntimeError("power conservation violated")
        if not 0 <= pool.cpu_free <= pool.cpu_capacity:
            raise RuntimeError("cpu_free out of range")
        if not 0 <= pool.power_free <= pool.power_capacity:
            raise RuntimeError("power_free out of range")
        for r in self.queue:
            if self.slot - r.arrival_slot >= r.deadline:
                raise RuntimeError("queued request survived past its deadline")
        if self.arrived != self.granted + self.expired + len(self.queue):
            raise RuntimeError("arrived != granted + expired + queued")
        if sum(self.served_per_ue) != self.granted:
            raise RuntimeError("per-UE served counts out of sync")


def generate_arrivals(
    arrival_rng: random.Random,
    attribute_rng: random.Random,
    config: "ScenarioConfig",
    slot: int,
) -> list[SliceRequest]:
    """Bernoulli arrivals: each UE independently files at most one request per slot.

    Draw order is fixed.  One arrival coin per UE (ue 0..N-1) comes from
    arrival_rng; for each arrival, weight, lifetime, deadline, cpu demand and
    the per-block rate multiple come from attribute_rng in that order.  The
    weight draw is consumed even when fixed_weights overrides it, so the
    attribute stream stays aligned across weight configurations.
    """
    if not 0.0 <= config.arrival_rate <= 1.0:
        raise ValueError("arrival_rate: must be in [0, 1]")
    out: list[SliceRequest] = []
    for ue in range(config.n_ues):
        if arrival_rng.random() >= config.arrival_rate:
            continue
        weight = attribute_rng.randint(*config.weight_range)
        if config.fixed_weights is not None:
            weight = config.fixed_weights[ue]
        lifetime = attribute_rng.randint(*config.lifetime_range)
        deadline = attribute_rng.randint(*config.deadline_range)
        cpu_demand = attribute_rng.randint(*config.cpu_demand_range)
        k_req = attribute_rng.randint(*config.rate_blocks_range)
        out.append(
            SliceRequest(
                ue_id=ue,
                req_id=slot,
                weight=weight,
                demand_rate=k_req * config.per_block_rate_c,
                cpu_demand=cpu_demand,
                deadline=deadline,
                lifetime=lifetime,
                arrival_slot=slot,
            )
        )
    return out
