"""Allocation policies, each run once per slot against the live environment.

Four policies share one contract: inspect the queue, grant whatever they pick
through EnvState.apply_grant, and never exceed the pool.

* qlearning_slot: tabular Q-learning over (pool, request) decision states
  with a binary GRANT/DEFER action per queued request.
* myopic_slot: exact maximum-weight packing of the current slot via dynamic
  programming over the (blocks, cpu, power) capacity lattice.
* fcfs_slot: greedy in arrival order.
* random_slot: greedy in uniformly shuffled order.

myopic_bruteforce is the subset-enumeration oracle twin of myopic_slot.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from .env import EnvState, Grant, SliceRequest
from .phy import Bundle, LinkModel


class Action(IntEnum):
    DEFER = 0
    GRANT = 1


# Block counts in the decision state saturate here to bound the table.
KBLOCKS_STATE_CAP = 5
CPU_BUCKET_SIZE = 5


class DecisionState(NamedTuple):
    """Discretized view the agent sees when deciding on one request."""

    free_blocks: int
    cpu_bucket: int
    power_free: int
    req_weight: int
    req_kblocks: int


def discretize(pool, request: SliceRequest, bundle: Bundle | None) -> DecisionState:
    """Map the pool plus the request under decision to a table state.

    CPU collapses into buckets of 5 levels; the minimal bundle's block count
    saturates at KBLOCKS_STATE_CAP.  An infeasible request (bundle None)
    discretizes with the req_kblocks sentinel 0.
    """
    k = 0 if bundle is None else min(bundle.num_blocks, KBLOCKS_STATE_CAP)
    return DecisionState(
        free_blocks=pool.free_blocks,
        cpu_bucket=pool.cpu_free // CPU_BUCKET_SIZE,
        power_free=pool.power_free,
        req_weight=request.weight,
        req_kblocks=k,
    )


@dataclass
class AgentConfig:
    """Q-learning hyperparameters.

    epsilon_final, when set, linearly decays exploration from epsilon to that
    value over the run; None keeps epsilon fixed.
    """

    alpha: float = 0.1
    gamma: float = 0.95
    epsilon: float = 0.1
    epsilon_final: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha: must be in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma: must be in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon: must be in [0, 1]")
        if self.epsilon_final is not None and not 0.0 <= self.epsilon_final <= 1.0:
            raise ValueError("epsilon_final: must be in [0, 1] or null")


class QTable:
    """State-action values, lazily initialised to U[0,1) draws on first read.

    Unseen entries read as their would-be initial draw, materialised from the
    dedicated init stream at first access so replays are reproducible.  For a
    given state the GRANT entry is always materialised before DEFER, keeping
    the draw order independent of which action is asked about first.
    """

    def __init__(self, init_rng: random.Random) -> None:
        self._rng = init_rng
        self._values: dict[tuple[DecisionState, int], float] = {}

    def value(self, state: DecisionState, action: int) -> float:
        self._materialize(state)
        return self._values[(state, int(action))]

    def set_value(self, state: DecisionState, action: int, value: float) -> None:
        self._materialize(state)
        self._values[(state, int(action))] = value

    def max_value(self, state: DecisionState) -> float:
        return max(self.value(state, Action.GRANT), self.value(state, Action.DEFER))

    def best_action(self, state: DecisionState) -> Action:
        """Greedy action; exact ties resolve to GRANT."""
        if self.value(state, Action.GRANT) >= self.value(state, Action.DEFER):
            return Action.GRANT
        return Action.DEFER

    def _materialize(self, state: DecisionState) -> None:
        key = (state, int(Action.GRANT))
        if key not in self._values:
            self._values[key] = self._rng.random()
            self._values[(state, int(Action.DEFER))] = self._rng.random()

    def states(self) -> set[DecisionState]:
        return {s for s, _ in self._values}

    def __len__(self) -> int:
        return len(self._values)


def q_update(
    table: QTable,
    state: DecisionState,
    action: int,
    reward: float,
    next_state: DecisionState,
    cfg: AgentConfig,
) -> None:
    """One temporal-difference step toward reward + gamma * max_a' Q(next, a')."""
    old = table.value(state, action)
    target = reward + cfg.gamma * table.max_value(next_state)
    table.set_value(state, action, old + cfg.alpha * (target - old))


def decision_order(queue: Sequence[SliceRequest]) -> list[SliceRequest]:
    """Weight descending, ties by arrival slot then UE id."""
    return sorted(queue, key=lambda r: (-r.weight, r.arrival_slot, r.ue_id))


def qlearning_slot(
    env: EnvState,
    table: QTable,
    cfg: AgentConfig,
    rng: random.Random,
    link: LinkModel,
) -> list[Grant]:
    """Decide GRANT or DEFER for each queued request, highest weight first.

    Within the slot, decisions chain: each update bootstraps from the state
    facing the next feasible request. The last decision bootstraps from an
    end-of-slot state built from the closing pool with the final request's
    feature fields, which aliases states the table keeps updating, so value
    flows across slot boundaries instead of dead-ending in never-updated
    entries.  Requests with no feasible bundle are skipped without an update.
    Exploration consumes one uniform draw per decision, plus one more when
    the coin says explore.
    """
    grants: list[Grant] = []
    pending: tuple[DecisionState, Action, float] | None = None
    for request in decision_order(env.queue):
        bundle = link.min_bundle_for(request, env.pool)
        if bundle is None:
            continue
        state = discretize(env.pool, request, bundle)
        if pending is not None:
            q_update(table, pending[0], pending[1], pending[2], state, cfg)
        if rng.random() < cfg.epsilon:
            action = Action.GRANT if rng.random() < 0.5 else Action.DEFER
        else:
            action = table.best_action(state)
        reward = 0.0
        if action is Action.GRANT:
            grants.append(env.apply_grant(request, bundle))
            reward = float(request.weight)
        pending = (state, action, reward)
    if pending is not None:
        closing = DecisionState(
            free_blocks=env.pool.free_blocks,
            cpu_bucket=env.pool.cpu_free // CPU_BUCKET_SIZE,
            power_free=env.pool.power_free,
            req_weight=pending[0].req_weight,
            req_kblocks=pending[0].req_kblocks,
        )
        q_update(table, pending[0], pending[1], pending[2], closing, cfg)
    return grants


def solve_knapsack_dp(
    values: Sequence[int],
    costs: Sequence[tuple[int, int, int]],
    capacities: tuple[int, int, int],
) -> list[int]:
    """Exact 0/1 knapsack over a three-dimensional capacity lattice.

    Returns the chosen item indices.  Among equal-value optima the result is
    the lexicographically smallest index set (earlier items preferred), which
    the backtrack realises by including item i whenever an optimal completion
    through it exists.
    """
    n = len(values)
    cb, cc, cp = capacities
    shape = (cb + 1, cc + 1, cp + 1)
    best: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    best[n] = np.zeros(shape)
    for i in range(n - 1, -1, -1):
        kb, kc, kp = costs[i]
        take = np.full(shape, -np.inf)
        if kb <= cb and kc <= cc and kp <= cp:
            tail = best[i + 1][: cb + 1 - kb, : cc + 1 - kc, : cp + 1 - kp]
            take[kb:, kc:, kp:] = tail + values[i]
        best[i] = np.maximum(best[i + 1], take)
    chosen: list[int] = []
    b, c, p = cb, cc, cp
    for i in range(n):
        kb, kc, kp = costs[i]
        if kb <= b and kc <= c and kp <= p:
            if values[i] + best[i + 1][b - kb, c - kc, p - kp] == best[i][b, c, p]:
                chosen.append(i)
                b, c, p = b - kb, c - kc, p - kp
    return chosen


def solve_knapsack_bruteforce(
    values: Sequence[int],
    costs: Sequence[tuple[int, int, int]],
    capacities: tuple[int, int, int],
) -> list[int]:
    """Subset-enumeration oracle for the slot knapsack; refuses n > 20.

    Same tie-break as the DP: among maximum-value feasible subsets, the
    lexicographically smallest index tuple wins.
    """
    n = len(values)
    if n > 20:
        raise ValueError("brute force capped at 20 items")
    cb, cc, cp = capacities
    best_val = 0
    best_set: tuple[int, ...] = ()
    for mask in range(1 << n):
        tb = tc = tp = tv = 0
        items: list[int] = []
        for i in range(n):
            if mask >> i & 1:
                kb, kc, kp = costs[i]
                tb += kb
                tc += kc
                tp += kp
                tv += values[i]
                items.append(i)
        if tb <= cb and tc <= cc and tp <= cp:
            t = tuple(items)
            if tv > best_val or (tv == best_val and t < best_set):
                best_val = tv
                best_set = t
    return list(best_set)


def _snapshot_items(env: EnvState, link: LinkModel) -> list[tuple[SliceRequest, Bundle]]:
    """Queue entries with their standalone minimal bundles against the current pool."""
    items = []
    for request in env.queue:
        bundle = link.min_bundle_for(request, env.pool)
        if bundle is not None:
            items.append((request, bundle))
    return items


def myopic_slot(env: EnvState, link: LinkModel) -> list[Grant]:
    """Grant the maximum-weight feasible subset of the queue for this slot.

    Solves max sum(w) subject to sum(blocks) <= free blocks, sum(cpu) <= free
    cpu and sum(power) <= free power exactly; each request costs its
    standalone minimal bundle.  No lookahead beyond the current slot.
    """
    items = _snapshot_items(env, link)
    if not items:
        return []
    values = [r.weight for r, _ in items]
    costs = [(b.num_blocks, b.cpu_levels, b.power_level) for _, b in items]
    caps = (env.pool.free_blocks, env.pool.cpu_free, env.pool.power_free)
    chosen = solve_knapsack_dp(values, costs, caps)
    return [env.apply_grant(items[i][0], items[i][1]) for i in chosen]


def myopic_bruteforce(env: EnvState, link: LinkModel) -> list[SliceRequest]:
    """Requests an exhaustive subset search would grant; does not mutate env."""
    items = _snapshot_items(env, link)
    if not items:
        return []
    values = [r.weight for r, _ in items]
    costs = [(b.num_blocks, b.cpu_levels, b.power_level) for _, b in items]
    caps = (env.pool.free_blocks, env.pool.cpu_free, env.pool.power_free)
    chosen = solve_knapsack_bruteforce(values, costs, caps)
    return [items[i][0] for i in chosen]


def fcfs_slot(env: EnvState, link: LinkModel) -> list[Grant]:
    """Greedy pass in arrival order; keeps going past requests that do not fit."""
    grants = []
    for request in list(env.queue):
        bundle = link.min_bundle_for(request, env.pool)
        if bundle is not None:
            grants.append(env.apply_grant(request, bundle))
    return grants


def random_slot(env: EnvState, rng: random.Random, link: LinkModel) -> list[Grant]:
    """Greedy pass over a uniformly shuffled copy of the queue."""
    order = list(env.queue)
    rng.shuffle(order)
    grants = []
    for request in order:
        bundle = link.min_bundle_for(request, env.pool)
        if bundle is not None:
            grants.append(env.apply_grant(request, bundle))
    return grants
