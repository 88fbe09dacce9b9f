"""Scenario configuration: defaults, JSON loading, validation.

The default values reproduce the headline experiment setup: 3 UEs at arrival
rate 0.5 over 1000 slots competing for 11 frequency blocks, 50 CPU levels and
10 power units with 5 transmit levels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .allocators import AgentConfig
from .coordination import Topology
from .phy import DEFAULT_PER_BLOCK_RATE

ALLOCATORS = ("qlearning", "myopic", "fcfs", "random")
INCUMBENT_PATTERNS = ("none", "iid", "session")

_RANGE_FIELDS = (
    "weight_range",
    "lifetime_range",
    "deadline_range",
    "cpu_demand_range",
    "rate_blocks_range",
)


@dataclass
class ScenarioConfig:
    # population and traffic
    n_ues: int = 3
    arrival_rate: float = 0.5
    horizon_slots: int = 1000
    # gNodeB capacities
    n_blocks: int = 11
    cpu_levels: int = 50
    power_budget: int = 10
    power_levels: int = 5
    per_block_rate_c: float = DEFAULT_PER_BLOCK_RATE
    # request attribute distributions (inclusive integer ranges)
    weight_range: tuple[int, int] = (1, 5)
    lifetime_range: tuple[int, int] = (1, 10)
    deadline_range: tuple[int, int] = (1, 20)
    cpu_demand_range: tuple[int, int] = (1, 10)
    rate_blocks_range: tuple[int, int] = (1, 3)
    fixed_weights: tuple[int, ...] | None = None
    # radio: per-UE full-power SNR drawn uniformly from this dB interval
    max_snr_range: tuple[float, float] = (1.5, 3.0)
    ber_curve: Any = None  # None = built-in curve, [[snr_db, ber], ...], or a CSV path
    # agent and allocator
    agent: AgentConfig = field(default_factory=AgentConfig)
    allocator: str = "qlearning"
    # incumbent occupancy
    incumbent_pattern: str = "none"
    incumbent_p: float = 0.0
    # optional multi-gNodeB interference graph (not used by single-cell runs)
    topology: Topology | None = None
    # reproducibility and checking
    seed: int = 0
    debug_checks: bool = True

    def validate(self) -> None:
        """Raise ValueError naming the offending field on any bad value."""
        if self.n_ues < 1:
            raise ValueError("n_ues: must be >= 1")
        if not 0.0 <= self.arrival_rate <= 1.0:
            raise ValueError("arrival_rate: must be in [0, 1]")
        if self.horizon_slots < 0:
            raise ValueError("horizon_slots: must be >= 0")
        for name in ("n_blocks", "cpu_levels", "power_budget", "power_levels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name}: must be >= 1")
        if self.per_block_rate_c <= 0:
            raise ValueError("per_block_rate_c: must be > 0")
        for name in _RANGE_FIELDS:
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"{name}: must satisfy 1 <= lo <= hi")
        if self.fixed_weights is not None:
            if len(self.fixed_weights) != self.n_ues:
                raise ValueError("fixed_weights: needs one weight per UE")
            if any(w < 1 for w in self.fixed_weights):
                raise ValueError("fixed_weights: weights must be >= 1")
        lo, hi = self.max_snr_range
        if lo > hi:
            raise ValueError("max_snr_range: must satisfy lo <= hi")
        if self.allocator not in ALLOCATORS:
            raise ValueError(f"allocator: must be one of {ALLOCATORS}")
        if self.incumbent_pattern not in INCUMBENT_PATTERNS:
            raise ValueError(f"incumbent.pattern: must be one of {INCUMBENT_PATTERNS}")
        if not 0.0 <= self.incumbent_p <= 1.0:
            raise ValueError("incumbent.p_i: must be in [0, 1]")
        if self.incumbent_pattern == "session" and self.incumbent_p >= 1.0:
            raise ValueError("incumbent.p_i: session pattern requires p_i < 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        """Build from a JSON-compatible tree, rejecting unknown keys."""
        data = dict(raw)
        kwargs: dict[str, Any] = {}
        if "agent" in data:
            try:
                kwargs["agent"] = AgentConfig(**data.pop("agent"))
            except TypeError as e:
                raise ValueError(f"agent: {e}")
            except ValueError as e:
                raise ValueError(f"agent.{e}")
        if "incumbent" in data:
            inc = data.pop("incumbent")
            unknown = set(inc) - {"pattern", "p_i"}
            if unknown:
                raise ValueError(f"incumbent: unknown keys {sorted(unknown)}")
            kwargs["incumbent_pattern"] = inc.get("pattern", "none")
            kwargs["incumbent_p"] = float(inc.get("p_i", 0.0))
        if "topology" in data:
            topo = data.pop("topology")
            if topo is not None:
                try:
                    topo = Topology.from_pairs(topo["n_gnbs"], topo.get("neighbor_pairs", []))
                except (KeyError, ValueError, TypeError) as e:
                    raise ValueError(f"topology: {e}")
            kwargs["topology"] = topo
        if "fixed_weights" in data:
            fw = data.pop("fixed_weights")
            kwargs["fixed_weights"] = None if fw is None else tuple(int(w) for w in fw)
        for name in _RANGE_FIELDS + ("max_snr_range",):
            if name in data:
                lo, hi = data.pop(name)
                kwargs[name] = (lo, hi)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs.update(data)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        """JSON-compatible echo of every field."""
        d: dict[str, Any] = {
            "n_ues": self.n_ues,
            "arrival_rate": self.arrival_rate,
            "horizon_slots": self.horizon_slots,
            "n_blocks": self.n_blocks,
            "cpu_levels": self.cpu_levels,
            "power_budget": self.power_budget,
            "power_levels": self.power_levels,
            "per_block_rate_c": self.per_block_rate_c,
            "weight_range": list(self.weight_range),
            "lifetime_range": list(self.lifetime_range),
            "deadline_range": list(self.deadline_range),
            "cpu_demand_range": list(self.cpu_demand_range),
            "rate_blocks_range": list(self.rate_blocks_range),
            "fixed_weights": None if self.fixed_weights is None else list(self.fixed_weights),
            "max_snr_range": list(self.max_snr_range),
            "ber_curve": self.ber_curve if not isinstance(self.ber_curve, Path) else str(self.ber_curve),
            "agent": {
                "alpha": self.agent.alpha,
                "gamma": self.agent.gamma,
                "epsilon": self.agent.epsilon,
                "epsilon_final": self.agent.epsilon_final,
            },
            "allocator": self.allocator,
            "incumbent": {"pattern": self.incumbent_pattern, "p_i": self.incumbent_p},
            "topology": None
            if self.topology is None
            else {
                "n_gnbs": self.topology.n_gnbs,
                "neighbor_pairs": sorted([a, b] for a, b in self.topology.neighbor_pairs),
            },
            "seed": self.seed,
            "debug_checks": self.debug_checks,
        }
        return d


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a JSON scenario file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: invalid JSON ({e})")
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top level must be an object")
    return ScenarioConfig.from_dict(raw)
