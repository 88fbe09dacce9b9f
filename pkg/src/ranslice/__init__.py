"""Discrete-time 5G RAN slicing simulator and allocator library.

Stochastic slice requests compete for frequency blocks, transmit power and
CPU at a gNodeB; a tabular Q-learning allocator is compared against an exact
myopic packing, FCFS and random baselines, optionally under incumbent (radar)
spectrum occupancy and multi-gNodeB block coordination.
"""

from .allocators import (
    Action,
    AgentConfig,
    DecisionState,
    QTable,
    decision_order,
    discretize,
    fcfs_slot,
    myopic_bruteforce,
    myopic_slot,
    q_update,
    qlearning_slot,
    random_slot,
    solve_knapsack_bruteforce,
    solve_knapsack_dp,
)
from .config import ALLOCATORS, INCUMBENT_PATTERNS, ScenarioConfig, load_config
from .coordination import (
    PlannedAssignment,
    Topology,
    locally_surviving_plans,
    preprocess_mask,
    resolve_conflicts,
)
from .env import (
    CapacityError,
    EnvState,
    Grant,
    ResourcePool,
    SliceRequest,
    SlotStats,
    generate_arrivals,
)
from .harness import (
    ComparisonResult,
    MetricsRecord,
    SummaryReport,
    SweepResult,
    SweepRow,
    compare_allocators,
    run_scenario,
    run_sweep,
    write_comparison,
    write_outputs,
    write_sweep,
)
from .incumbent import OccupancyMask, SessionProcess, apply_mask, iid_mask
from .phy import (
    BerCurve,
    Bundle,
    CarrierConfig,
    LinkBudget,
    LinkModel,
    effective_rate,
    min_bundle,
    nr_max_rate,
    snr_at_power,
)
from .rng import derive_seed, substream

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AgentConfig",
    "ALLOCATORS",
    "apply_mask",
    "BerCurve",
    "Bundle",
    "CapacityError",
    "CarrierConfig",
    "compare_allocators",
    "ComparisonResult",
    "decision_order",
    "DecisionState",
    "derive_seed",
    "discretize",
    "effective_rate",
    "EnvState",
    "fcfs_slot",
    "generate_arrivals",
    "Grant",
    "iid_mask",
    "INCUMBENT_PATTERNS",
    "LinkBudget",
    "LinkModel",
    "load_config",
    "locally_surviving_plans",
    "MetricsRecord",
    "min_bundle",
    "myopic_bruteforce",
    "myopic_slot",
    "nr_max_rate",
    "OccupancyMask",
    "PlannedAssignment",
    "preprocess_mask",
    "QTable",
    "q_update",
    "qlearning_slot",
    "random_slot",
    "resolve_conflicts",
    "ResourcePool",
    "run_scenario",
    "run_sweep",
    "ScenarioConfig",
    "SessionProcess",
    "SliceRequest",
    "SlotStats",
    "snr_at_power",
    "solve_knapsack_bruteforce",
    "solve_knapsack_dp",
    "substream",
    "SummaryReport",
    "SweepResult",
    "SweepRow",
    "Topology",
    "write_comparison",
    "write_outputs",
    "write_sweep",
]
