"""Multi-gNodeB block coordination.

Before planning, a gNodeB masks out blocks its neighbors already use.  After
planning, a resolver drops every plan that loses any of its blocks to a
higher-priority neighboring plan.  The resolver is a single pass against the
full input set, so it is deterministic, idempotent and monotone: removing a
loser never reinstates another loser.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .incumbent import OccupancyMask


@dataclass(frozen=True)
class Topology:
    """Interference graph over gNodeB ids 0..n_gnbs-1 with symmetric edges."""

    n_gnbs: int
    neighbor_pairs: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, n_gnbs: int, pairs: Iterable[Sequence[int]]) -> "Topology":
        if n_gnbs < 1:
            raise ValueError("n_gnbs must be >= 1")
        norm = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"self pair ({a}, {b}) not allowed")
            if not (0 <= a < n_gnbs and 0 <= b < n_gnbs):
                raise ValueError(f"pair ({a}, {b}) outside 0..{n_gnbs - 1}")
            norm.add((min(a, b), max(a, b)))
        return cls(n_gnbs=n_gnbs, neighbor_pairs=frozenset(norm))

    def are_neighbors(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.neighbor_pairs

    def neighbors_of(self, gnb_id: int) -> list[int]:
        if not 0 <= gnb_id < self.n_gnbs:
            raise ValueError(f"unknown gNodeB id {gnb_id}")
        out = set()
        for a, b in self.neighbor_pairs:
            if a == gnb_id:
                out.add(b)
            elif b == gnb_id:
                out.add(a)
        return sorted(out)


@dataclass(frozen=True)
class PlannedAssignment:
    """A gNodeB's intent to grant one request on a concrete set of blocks."""

    gnb_id: int
    block_ids: frozenset[int]
    weight: int
    request_key: int

    def __post_init__(self) -> None:
        if not self.block_ids:
            raise ValueError("a planned assignment needs at least one block")


def preprocess_mask(
    gnb_id: int,
    topology: Topology,
    neighbor_usage: Mapping[int, Sequence[bool]],
) -> OccupancyMask:
    """Union of the neighbors' in-use blocks, as extra unavailability for gnb_id.

    neighbor_usage maps every gNodeB id to its per-block in-use vector.  A
    gNodeB with no neighbors gets an all-free mask.
    """
    if not 0 <= gnb_id < topology.n_gnbs:
        raise ValueError(f"unknown gNodeB id {gnb_id}")
    n_blocks = len(neighbor_usage[gnb_id])
    mask = [False] * n_blocks
    for nb in topology.neighbors_of(gnb_id):
        usage = neighbor_usage[nb]
        if len(usage) != n_blocks:
            raise ValueError("neighbor usage vectors must share one block count")
        for i, used in enumerate(usage):
            if used:
                mask[i] = True
    return mask


def _beats(a: PlannedAssignment, b: PlannedAssignment) -> bool:
    """Priority order: higher weight, then lower gnb_id, then lower request key."""
    return (-a.weight, a.gnb_id, a.request_key) < (-b.weight, b.gnb_id, b.request_key)


def resolve_conflicts(
    plans: Sequence[PlannedAssignment],
    topology: Topology,
) -> list[PlannedAssignment]:
    """Keep only plans unbeaten on every block against neighboring plans.

    A plan contends with another when their gNodeBs are neighbors and their
    block sets overlap; the higher-priority plan wins the whole contention,
    and a plan that loses anywhere is removed entirely.  All comparisons run
    against the original input, never against intermediate survivors.
    """
    survivors = []
    for p in plans:
        beaten = any(
            q is not p
            and topology.are_neighbors(p.gnb_id, q.gnb_id)
            and p.block_ids & q.block_ids
            and _beats(q, p)
            for q in plans
        )
        if not beaten:
            survivors.append(p)
    return survivors


def locally_surviving_plans(
    gnb_id: int,
    plans: Sequence[PlannedAssignment],
    topology: Topology,
) -> list[PlannedAssignment]:
    """Distributed variant: one gNodeB's surviving plans from the exchanged set.

    Evaluates the identical rule locally, so the union over gNodeBs equals the
    central resolver's output exactly.
    """
    return [p for p in resolve_conflicts(plans, topology) if p.gnb_id == gnb_id]
