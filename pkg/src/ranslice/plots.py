"""Matplotlib rendering of run, comparison and sweep reports to PNG files.

The delimited outputs stay canonical; these figures are a convenience view of
the same data, written alongside them.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

if TYPE_CHECKING:
    from .harness import ComparisonResult, MetricsRecord, SummaryReport, SweepResult


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_run_figure(records: Sequence["MetricsRecord"], report: "SummaryReport", path: str | Path) -> None:
    """Cumulative utility plus free-resource traces for one run."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    slots = [r.slot for r in records]
    ax1.plot(slots, [r.cum_utility for r in records], color="tab:blue")
    ax1.set_ylabel("cumulative utility")
    ax1.set_title(f"{report.allocator}, seed {report.seed}: total utility {report.total_utility}")
    ax2.plot(slots, [r.free_blocks for r in records], label="free blocks", lw=0.8)
    ax2.plot(slots, [r.free_power for r in records], label="free power", lw=0.8)
    ax2.plot(slots, [r.free_cpu for r in records], label="free cpu", lw=0.8)
    if any(r.incumbent_blocks for r in records):
        ax2.plot(slots, [r.incumbent_blocks for r in records], label="incumbent blocks", lw=0.8)
    ax2.set_xlabel("slot")
    ax2.set_ylabel("free units")
    ax2.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def render_comparison_figure(result: "ComparisonResult", path: str | Path) -> None:
    """Mean utility per allocator with min/max whiskers."""
    fig, ax = plt.subplots(figsize=(6, 4))
    names = result.allocators
    means = [result.mean(a) for a in names]
    lows = [means[i] - min(result.utilities[a]) for i, a in enumerate(names)]
    highs = [max(result.utilities[a]) - means[i] for i, a in enumerate(names)]
    ax.bar(names, means, yerr=[lows, highs], capsize=4, color="tab:blue", alpha=0.8)
    ax.set_ylabel("mean cumulative utility")
    ax.set_title(f"{len(result.seeds)} shared-traffic seeds")
    _save(fig, path)


def render_sweep_figure(result: "SweepResult", path: str | Path) -> None:
    """Parameter sweep view; shape depends on the swept parameter."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if result.param == "fixed_weights":
        labels = ["[" + ",".join(str(v) for v in r.value) + "]" for r in result.rows]
        n_ues = len(result.rows[0].per_ue_served_mean or [])
        width = 0.8 / max(n_ues, 1)
        for ue in range(n_ues):
            xs = [i + ue * width for i in range(len(result.rows))]
            ys = [(r.per_ue_served_mean or [0] * n_ues)[ue] for r in result.rows]
            ax.bar(xs, ys, width=width, label=f"ue {ue}")
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
        ax.set_xticklabels(labels)
        ax.set_ylabel("mean served requests")
        ax.set_xlabel("fixed weights")
        ax.legend(fontsize=8)
    elif result.param == "p_i":
        for pattern in ("iid", "session"):
            pts = [(float(r.value), r.mean_utility) for r in result.rows if r.pattern == pattern]
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=pattern)
        ax.set_xlabel("incumbent occupancy probability")
        ax.set_ylabel("mean cumulative utility")
        ax.legend()
    else:
        pts = [(float(r.value), r.mean_utility) for r in result.rows]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o")
        ax.set_xlabel(result.param)
        ax.set_ylabel("mean cumulative utility")
    ax.set_title(f"sweep over {result.param}")
    _save(fig, path)
