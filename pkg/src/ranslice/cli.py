"""Command line front end with run, compare and sweep subcommands.

Output directory precedence: --out flag, then the RANSLICE_OUT environment
variable, then ./out.  Figures are rendered next to the delimited files
unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ALLOCATORS, ScenarioConfig, load_config
from .harness import (
    SWEEP_PARAMS,
    compare_allocators,
    run_scenario,
    run_sweep,
    write_comparison,
    write_outputs,
    write_sweep,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ranslice",
        description="Discrete-time RAN slicing simulator: Q-learning vs. myopic, FCFS and random allocators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON scenario file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p_run = sub.add_parser("run", help="simulate one scenario")
    common(p_run)
    p_run.add_argument("--allocator", choices=ALLOCATORS, default=None, help="allocator override")

    p_cmp = sub.add_parser("compare", help="run several allocators on shared traffic")
    common(p_cmp)
    p_cmp.add_argument(
        "--allocators",
        nargs="+",
        choices=ALLOCATORS,
        default=list(ALLOCATORS),
        help="allocators to compare (default: all)",
    )
    p_cmp.add_argument("--seeds", type=int, default=10, help="number of derived seeds")

    p_swp = sub.add_parser("sweep", help="sweep one scenario parameter")
    common(p_swp)
    p_swp.add_argument("--allocator", choices=ALLOCATORS, default=None, help="allocator override")
    p_swp.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_swp.add_argument(
        "--values",
        nargs="+",
        required=True,
        help="JSON-encoded values, e.g. 6 0.2 or [1,3,5]",
    )
    p_swp.add_argument("--seeds", type=int, default=10, help="number of derived seeds")
    return parser


def _base_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "allocator", None):
        cfg = replace(cfg, allocator=args.allocator)
    cfg.validate()
    return cfg


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("RANSLICE_OUT")
    if env:
        return Path(env)
    return Path("out")


def _formats(args: argparse.Namespace, base: tuple[str, ...]) -> tuple[str, ...]:
    return base if args.no_figures else base + ("png",)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _base_config(args)
            records, report = run_scenario(config)
            paths = write_outputs(records, report, _out_dir(args), _formats(args, ("csv", "json")))
            print(
                f"{report.allocator} seed={report.seed}: utility={report.total_utility} "
                f"granted={report.granted} expired={report.expired} "
                f"({report.wall_time_s:.2f}s)"
            )
            for p in paths:
                print(f"wrote {p}")
        elif args.command == "compare":
            config = _base_config(args)
            result = compare_allocators(config, args.allocators, args.seeds)
            paths = write_comparison(result, _out_dir(args), _formats(args, ("csv",)))
            for a in result.allocators:
                vals = result.utilities[a]
                print(f"{a}: mean={result.mean(a):.1f} min={min(vals)} max={max(vals)}")
            for p in paths:
                print(f"wrote {p}")
        else:
            config = _base_config(args)
            try:
                values = [json.loads(v) for v in args.values]
            except json.JSONDecodeError as e:
                raise ValueError(f"--values: invalid JSON ({e})")
            result = run_sweep(config, args.param, values, args.seeds)
            paths = write_sweep(result, _out_dir(args), _formats(args, ("csv",)))
            for row in result.rows:
                tag = f" {row.pattern}" if row.pattern else ""
                print(f"{row.param}={row.value}{tag}: mean_utility={row.mean_utility:.1f}")
            for p in paths:
                print(f"wrote {p}")
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
