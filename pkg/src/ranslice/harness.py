"""Seeded experiment execution: single runs, comparisons, sweeps, file output.

Each run derives independent named substreams from the master seed, so
changing the allocator (or its exploration) never perturbs the arrival,
attribute or incumbent draws.  Comparisons and sweeps rerun distinct
allocators or parameter values against byte-identical traffic per seed,
which the run summaries prove with stream fingerprints.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

from .allocators import AgentConfig, QTable, fcfs_slot, myopic_slot, qlearning_slot, random_slot
from .config import ScenarioConfig
from .env import EnvState, Grant, generate_arrivals
from .incumbent import SessionProcess, iid_mask
from .phy import BerCurve, LinkBudget, LinkModel, effective_rate
from .rng import derive_seed, substream

STREAM_NAMES = ("arrivals", "attributes", "channel", "incumbent", "explore", "qinit", "randalloc")

METRICS_HEADER = "slot,granted,expired,cum_utility,free_blocks,free_cpu,free_power,incumbent_blocks"

SWEEP_PARAMS = ("n_ues", "p_i", "fixed_weights")


@dataclass
class MetricsRecord:
    """Per-slot time series row, captured after the slot's allocations."""

    slot: int
    granted: int
    expired: int
    cum_utility: int
    free_blocks: int
    free_cpu: int
    free_power: int
    incumbent_blocks: int


@dataclass
class SummaryReport:
    """End-of-run totals plus the config echo and stream fingerprints.

    wall_time_s is informational only and deliberately left out of the
    serialized form so that output files depend on nothing but (config, seed).
    """

    allocator: str
    seed: int
    horizon_slots: int
    total_utility: int
    arrived: int
    granted: int
    expired: int
    queue_remaining: int
    per_ue_served: list[int]
    arrival_fingerprint: str
    incumbent_fingerprint: str
    qtable_states: int | None
    config: dict
    wall_time_s: float | None = None

    def to_dict(self) -> dict:
        return {
            "allocator": self.allocator,
            "seed": self.seed,
            "horizon_slots": self.horizon_slots,
            "total_utility": self.total_utility,
            "arrived": self.arrived,
            "granted": self.granted,
            "expired": self.expired,
            "queue_remaining": self.queue_remaining,
            "per_ue_served": list(self.per_ue_served),
            "arrival_fingerprint": self.arrival_fingerprint,
            "incumbent_fingerprint": self.incumbent_fingerprint,
            "qtable_states": self.qtable_states,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryReport":
        return cls(wall_time_s=None, **d)


def _build_curve(spec: Any) -> BerCurve:
    if spec is None:
        return BerCurve.default()
    if isinstance(spec, (str, Path)):
        return BerCurve.from_csv(spec)
    return BerCurve((p[0], p[1]) for p in spec)


def _build_link(config: ScenarioConfig, channel_rng) -> LinkModel:
    """Per-UE link budgets; full-power SNR drawn once per UE in id order."""
    lo, hi = config.max_snr_range
    budgets = [LinkBudget(channel_rng.uniform(lo, hi), config.power_levels) for _ in range(config.n_ues)]
    return LinkModel(curve=_build_curve(config.ber_curve), budgets=budgets, per_block_rate_c=config.per_block_rate_c)


def _recheck_grants(grants: Sequence[Grant], link: LinkModel) -> None:
    """Independent post-grant check: rate and CPU adequacy of every bundle."""
    for g in grants:
        ber = link.ber_for(g.request.ue_id, g.bundle.power_level)
        rate = effective_rate(link.per_block_rate_c, g.bundle.num_blocks, ber)
        if rate < g.request.demand_rate - 1e-6:
            raise RuntimeError(f"grant rate {rate} below demand {g.request.demand_rate}")
        if g.bundle.cpu_levels != g.request.cpu_demand:
            raise RuntimeError("grant cpu does not match request demand")


def run_scenario(config: ScenarioConfig) -> tuple[list[MetricsRecord], SummaryReport]:
    """Simulate one scenario and return its per-slot records plus the summary."""
    config.validate()
    t0 = time.perf_counter()
    streams = {name: substream(config.seed, name) for name in STREAM_NAMES}
    link = _build_link(config, streams["channel"])
    env = EnvState(
        n_blocks=config.n_blocks,
        cpu_levels=config.cpu_levels,
        power_budget=config.power_budget,
        n_ues=config.n_ues,
        debug_checks=config.debug_checks,
    )

    table: QTable | None = None
    if config.allocator == "qlearning":
        table = QTable(streams["qinit"])
    agent_cfg = config.agent
    session = (
        SessionProcess(config.incumbent_p, config.n_blocks)
        if config.incumbent_pattern == "session"
        else None
    )

    arrival_hash = hashlib.sha256()
    mask_hash = hashlib.sha256()

    def allocate(e: EnvState) -> list[Grant]:
        if config.allocator == "qlearning":
            cfg = agent_cfg
            if cfg.epsilon_final is not None and config.horizon_slots > 1:
                frac = e.slot / (config.horizon_slots - 1)
                cfg = replace(cfg, epsilon=cfg.epsilon + (cfg.epsilon_final - cfg.epsilon) * frac)
            return qlearning_slot(e, table, cfg, streams["explore"], link)
        if config.allocator == "myopic":
            return myopic_slot(e, link)
        if config.allocator == "fcfs":
            return fcfs_slot(e, link)
        return random_slot(e, streams["randalloc"], link)

    records: list[MetricsRecord] = []
    for slot in range(config.horizon_slots):
        arrivals = generate_arrivals(streams["arrivals"], streams["attributes"], config, slot)
        for r in arrivals:
            arrival_hash.update(
                f"{r.arrival_slot}:{r.ue_id}:{r.weight}:{r.demand_rate!r}:"
                f"{r.cpu_demand}:{r.lifetime}:{r.deadline}\n".encode()
            )
        mask = None
        if config.incumbent_pattern == "iid":
            mask = iid_mask(streams["incumbent"], config.incumbent_p, config.n_blocks)
        elif config.incumbent_pattern == "session":
            mask = session.step(streams["incumbent"])
        if mask is not None:
            mask_hash.update(("".join("1" if x else "0" for x in mask) + "\n").encode())
        stats = env.advance_slot(arrivals, allocate=allocate, next_mask=mask)
        if config.debug_checks:
            _recheck_grants(stats.grants, link)
        records.append(
            MetricsRecord(
                slot=slot,
                granted=len(stats.grants),
                expired=len(stats.expired),
                cum_utility=env.cum_utility,
                free_blocks=env.pool.free_blocks,
                free_cpu=env.pool.cpu_free,
                free_power=env.pool.power_free,
                incumbent_blocks=stats.incumbent_blocks,
            )
        )

    report = SummaryReport(
        allocator=config.allocator,
        seed=config.seed,
        horizon_slots=config.horizon_slots,
        total_utility=env.cum_utility,
        arrived=env.arrived,
        granted=env.granted,
        expired=env.expired,
        queue_remaining=len(env.queue),
        per_ue_served=list(env.served_per_ue),
        arrival_fingerprint=arrival_hash.hexdigest(),
        incumbent_fingerprint=mask_hash.hexdigest(),
        qtable_states=len(table.states()) if table is not None else None,
        config=config.to_dict(),
        wall_time_s=time.perf_counter() - t0,
    )
    return records, report


@dataclass
class ComparisonResult:
    """Utilities of several allocators over a shared list of derived seeds."""

    allocators: list[str]
    seeds: list[int]
    utilities: dict[str, list[int]]

    def mean(self, allocator: str) -> float:
        vals = self.utilities[allocator]
        return sum(vals) / len(vals)

    def improvement_pct(self, a: str, b: str) -> float:
        """Mean improvement of a over b, in percent of b."""
        return (self.mean(a) - self.mean(b)) / self.mean(b) * 100.0


def compare_allocators(
    config: ScenarioConfig,
    allocators: Sequence[str],
    n_seeds: int,
) -> ComparisonResult:
    """Run every allocator on every derived seed with shared traffic streams.

    The arrival and incumbent fingerprints must agree across allocators for
    each seed; a mismatch means stream isolation broke and raises.
    """
    if not allocators:
        raise ValueError("allocators: must be non-empty")
    if n_seeds < 1:
        raise ValueError("n_seeds: must be >= 1")
    seeds = [derive_seed(config.seed, "compare", k) for k in range(n_seeds)]
    utilities: dict[str, list[int]] = {a: [] for a in allocators}
    fingerprints: list[tuple[str, str] | None] = [None] * n_seeds
    for name in allocators:
        for idx, seed in enumerate(seeds):
            cfg = replace(config, allocator=name, seed=seed)
            _, report = run_scenario(cfg)
            utilities[name].append(report.total_utility)
            fp = (report.arrival_fingerprint, report.incumbent_fingerprint)
            if fingerprints[idx] is None:
                fingerprints[idx] = fp
            elif fingerprints[idx] != fp:
                raise RuntimeError("traffic streams diverged between allocators")
    return ComparisonResult(list(allocators), seeds, utilities)


@dataclass
class SweepRow:
    """Aggregated outcome of one sweep point (one value, one variant)."""

    param: str
    value: Any
    pattern: str | None
    allocator: str
    n_seeds: int
    mean_utility: float
    min_utility: int
    max_utility: int
    mean_granted: float
    mean_expired: float
    per_ue_served_mean: list[float] | None


@dataclass
class SweepResult:
    param: str
    rows: list[SweepRow]


def run_sweep(
    config: ScenarioConfig,
    param: str,
    values: Sequence[Any],
    n_seeds: int,
) -> SweepResult:
    """Sweep one parameter, one comparison row per value.

    n_ues and fixed_weights sweeps run the configured allocator; p_i sweeps
    run both incumbent patterns per value.  Weight sweeps also aggregate mean
    per-UE served counts.  Seeds are shared across all sweep points.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"param: unsupported {param!r}, expected one of {SWEEP_PARAMS}")
    if not values:
        raise ValueError("values: must be non-empty")
    if n_seeds < 1:
        raise ValueError("n_seeds: must be >= 1")
    seeds = [derive_seed(config.seed, "sweep", k) for k in range(n_seeds)]
    rows: list[SweepRow] = []
    for value in values:
        if param == "n_ues":
            variants = [(replace(config, n_ues=int(value)), None)]
        elif param == "p_i":
            variants = [
                (replace(config, incumbent_pattern=pat, incumbent_p=float(value)), pat)
                for pat in ("iid", "session")
            ]
        else:
            fw = tuple(int(w) for w in value)
            variants = [(replace(config, fixed_weights=fw), None)]
        for cfg_v, pattern in variants:
            utils: list[int] = []
            granted: list[int] = []
            expired: list[int] = []
            served: list[list[int]] = []
            for seed in seeds:
                _, report = run_scenario(replace(cfg_v, seed=seed))
                utils.append(report.total_utility)
                granted.append(report.granted)
                expired.append(report.expired)
                served.append(report.per_ue_served)
            per_ue = None
            if param == "fixed_weights":
                per_ue = [sum(col) / len(col) for col in zip(*served)]
            rows.append(
                SweepRow(
                    param=param,
                    value=value,
                    pattern=pattern,
                    allocator=cfg_v.allocator,
                    n_seeds=n_seeds,
                    mean_utility=sum(utils) / len(utils),
                    min_utility=min(utils),
                    max_utility=max(utils),
                    mean_granted=sum(granted) / len(granted),
                    mean_expired=sum(expired) / len(expired),
                    per_ue_served_mean=per_ue,
                )
            )
    return SweepResult(param=param, rows=rows)


def _fmt(x: Any) -> str:
    """Full-precision, locale-free rendering for CSV cells."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_outputs(
    records: Sequence[MetricsRecord],
    report: SummaryReport,
    out_dir: str | Path,
    formats: Sequence[str] = ("csv", "json", "png"),
) -> list[Path]:
    """Write a run's per-slot CSV, summary JSON and figure; returns the paths.

    Identical (config, seed) runs produce byte-identical CSV and JSON files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        path = out / "metrics.csv"
        lines = [METRICS_HEADER]
        for r in records:
            lines.append(
                f"{r.slot},{r.granted},{r.expired},{r.cum_utility},"
                f"{r.free_blocks},{r.free_cpu},{r.free_power},{r.incumbent_blocks}"
            )
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "json" in formats:
        path = out / "summary.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(path)
    if "png" in formats:
        from .plots import render_run_figure

        path = out / "run.png"
        render_run_figure(records, report, path)
        written.append(path)
    return written


def write_comparison(
    result: ComparisonResult,
    out_dir: str | Path,
    formats: Sequence[str] = ("csv", "png"),
) -> list[Path]:
    """Write the allocator comparison table (and figure)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        path = out / "comparison.csv"
        header = ["allocator", "seeds", "mean_utility", "min_utility", "max_utility"]
        header += [f"improvement_vs_{b}_pct" for b in result.allocators]
        lines = [",".join(header)]
        for a in result.allocators:
            vals = result.utilities[a]
            row = [a, str(len(vals)), _fmt(result.mean(a)), str(min(vals)), str(max(vals))]
            row += [_fmt(result.improvement_pct(a, b)) for b in result.allocators]
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "png" in formats:
        from .plots import render_comparison_figure

        path = out / "comparison.png"
        render_comparison_figure(result, path)
        written.append(path)
    return written


def write_sweep(
    result: SweepResult,
    out_dir: str | Path,
    formats: Sequence[str] = ("csv", "png"),
) -> list[Path]:
    """Write the sweep table (and figure)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    n_ues = max((len(r.per_ue_served_mean) for r in result.rows if r.per_ue_served_mean), default=0)
    if "csv" in formats:
        path = out / "sweep.csv"
        header = [
            "param",
            "value",
            "pattern",
            "allocator",
            "seeds",
            "mean_utility",
            "min_utility",
            "max_utility",
            "mean_granted",
            "mean_expired",
        ]
        header += [f"mean_served_ue{i}" for i in range(n_ues)]
        lines = [",".join(header)]
        for r in result.rows:
            if isinstance(r.value, (list, tuple)):
                value = "[" + ";".join(str(v) for v in r.value) + "]"
            else:
                value = _fmt(r.value)
            row = [
                r.param,
                value,
                r.pattern or "",
                r.allocator,
                str(r.n_seeds),
                _fmt(r.mean_utility),
                str(r.min_utility),
                str(r.max_utility),
                _fmt(r.mean_granted),
                _fmt(r.mean_expired),
            ]
            if n_ues:
                served = r.per_ue_served_mean or []
                row += [_fmt(served[i]) if i < len(served) else "" for i in range(n_ues)]
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "png" in formats:
        from .plots import render_sweep_figure

        path = out / "sweep.png"
        render_sweep_figure(result, path)
        written.append(path)
    return written
