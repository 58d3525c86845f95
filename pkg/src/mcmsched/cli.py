"""Command line: ``mcmsched {schedule,evaluate,complexity,pareto}``."""
from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__, corpus
from .costmodel import CostError, CostModel, DatabaseProvider, load_cost_db
from .hardware import HardwareError, McmSpec, load_hardware
from .report import (
    breakdown_csv,
    dumps,
    frontier_csv,
    frontier_from_window_points,
    parse_window_points,
    report_to_dict,
    schedule_from_dict,
    schedule_to_dict,
    window_points_csv,
    write_text,
)
from .schedtree import ScheduleError, complexity_estimate, violations
from .search import Objective, SearchConfig, SearchError, default_jobs, search
from .workload import Scenario, WorkloadError, load_scenario

ENUMERABLE_LOG10 = 7.0  # about ten million schedules is a desk-scale exhaustive sweep
# (layer counts, chiplets) -> published order-of-magnitude estimate, for side-by-side printing
REFERENCE_ESTIMATES = {((23, 50), 36): 56}


class CliError(Exception):
    pass


def _load_workload(arg: str) -> Scenario:
    p = Path(arg)
    if p.exists():
        return load_scenario(p)
    if arg in corpus.WORKLOADS:
        return corpus.scenario(arg)
    raise CliError(f"workload file not found: {arg}")


def _load_hardware(arg: str) -> McmSpec:
    p = Path(arg)
    if p.exists():
        return load_hardware(p)
    try:
        return corpus.hardware(arg)
    except KeyError:
        raise CliError(f"hardware file not found: {arg}") from None


def _provider(args):
    if getattr(args, "cost_db", None):
        p = Path(args.cost_db)
        if not p.exists():
            raise CliError(f"cost database not found: {p}")
        return DatabaseProvider(load_cost_db(p))
    return None


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", required=True, help="scenario document path or bundled name (sc1..sc5, motivational)")
    p.add_argument("--hardware", required=True, help="hardware document path or bundled name (e.g. het-sides-3x3)")
    p.add_argument("--cost-db", help="per-layer cost table; switches to the database cost provider")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcmsched", description="Multi-model scheduler for chiplet accelerators.")
    ap.add_argument("--version", action="version", version=f"mcmsched {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("schedule", help="search for a schedule and write artifacts")
    _add_inputs(s)
    s.add_argument("--objective", default="edp", help="latency | energy | edp | weighted:WL,WE")
    s.add_argument("--window-objective", help="objective used inside windows (default: --objective)")
    s.add_argument("--mode", choices=("exhaustive", "evolutionary", "random"), default="exhaustive")
    s.add_argument("--n-splits", type=int, default=4)
    s.add_argument("--packing", choices=("greedy", "uniform"), default="greedy")
    s.add_argument("--prov", choices=("uniform", "exhaustive"), default="uniform")
    s.add_argument("--allow-idle", action="store_true", help="exhaustive provisioning may leave chiplets idle")
    s.add_argument("--top-k", type=int, default=3)
    s.add_argument("--node-cap", type=int)
    s.add_argument("--pop", type=int, default=10)
    s.add_argument("--gens", type=int, default=4)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=default_jobs())
    s.add_argument("--out-dir", default="out")
    s.add_argument("--timestamps", action="store_true", help="record wall-clock times in the manifest")

    e = sub.add_parser("evaluate", help="validate and cost an existing schedule document")
    _add_inputs(e)
    e.add_argument("--schedule", required=True)
    e.add_argument("--out-dir")

    c = sub.add_parser("complexity", help="log10 size of the unrestricted scheduling space")
    c.add_argument("--workload")
    c.add_argument("--hardware")
    c.add_argument("--layers", help="comma-separated layer counts instead of a workload")
    c.add_argument("--chiplets", type=int, help="chiplet count instead of a hardware file")

    p = sub.add_parser("pareto", help="re-derive the frontier table from a results directory")
    p.add_argument("results", help="directory holding window_points.csv")
    p.add_argument("--out", help="write here instead of stdout")
    return ap


def cmd_schedule(args) -> int:
    sc = _load_workload(args.workload)
    mcm = _load_hardware(args.hardware)
    provider = _provider(args)
    seed = args.seed if args.seed is not None else random.SystemRandom().randrange(2**31)
    cfg = SearchConfig(
        n_splits=args.n_splits,
        packing=args.packing,
        prov=args.prov,
        top_k=args.top_k,
        node_cap=args.node_cap,
        mode=args.mode,
        pop=args.pop,
        gens=args.gens,
        seed=seed,
        allow_idle=args.allow_idle,
        jobs=max(1, args.jobs),
        window_objective=args.window_objective,
    )
    obj = Objective.parse(args.objective)
    started = datetime.now(timezone.utc)
    res = search(sc, mcm, obj, cfg, provider)
    errs = violations(res.best, sc, mcm)
    cm = CostModel(sc, mcm, provider)
    out = Path(args.out_dir)
    meta = {"hardware": mcm.name, "objective": args.objective, "schedule_id": res.best_id}
    artifacts = {
        "schedule.json": dumps(schedule_to_dict(res.best, sc, cm, meta)),
        "frontier.csv": frontier_csv(res.frontier),
        "window_points.csv": window_points_csv(res.window_points()),
        "breakdown.csv": breakdown_csv(sc, res.best, res.report),
        "cost.json": dumps({**report_to_dict(res.report), "score": float(f"{res.score:.12g}"), "evaluated": res.evaluated}),
    }
    manifest = {
        "tool": "mcmsched",
        "version": __version__,
        "command": "schedule",
        "inputs": {"workload": args.workload, "hardware": args.hardware, "cost_db": args.cost_db},
        "objective": args.objective,
        "seed": seed,
        "seed_source": "flag" if args.seed is not None else "generated",
        "config": asdict(cfg),
        "artifacts": sorted(artifacts) + ["manifest.json"],
    }
    if args.timestamps:
        manifest["started"] = started.isoformat()
        manifest["finished"] = datetime.now(timezone.utc).isoformat()
    artifacts["manifest.json"] = dumps(manifest)
    for name, text in artifacts.items():
        write_text(out / name, text)
    print(
        f"best {args.objective}: latency {res.report.latency:.6g} s, energy {res.report.energy:.6g} J, "
        f"edp {res.report.edp:.6g} J*s ({res.evaluated} window candidates)"
    )
    print(f"artifacts written to {out}")
    if errs:
        for msg in errs:
            print(f"violation: {msg}", file=sys.stderr)
        return 3
    return 0


def cmd_evaluate(args) -> int:
    sc = _load_workload(args.workload)
    mcm = _load_hardware(args.hardware)
    path = Path(args.schedule)
    if not path.exists():
        raise CliError(f"schedule file not found: {path}")
    fs = schedule_from_dict(json.loads(path.read_text()), sc)
    errs = violations(fs, sc, mcm)
    if errs:
        for msg in errs:
            print(f"violation: {msg}", file=sys.stderr)
        return 3
    r = CostModel(sc, mcm, _provider(args)).scenario_cost(fs)
    text = dumps(report_to_dict(r))
    if args.out_dir:
        write_text(Path(args.out_dir) / "cost.json", text)
    sys.stdout.write(text)
    return 0


def cmd_complexity(args) -> int:
    if args.layers:
        counts = [int(x) for x in args.layers.split(",")]
    elif args.workload:
        counts = [len(m) for m in _load_workload(args.workload).models]
    else:
        raise CliError("complexity needs --workload or --layers")
    if args.chiplets:
        n = args.chiplets
    elif args.hardware:
        n = _load_hardware(args.hardware).n_chiplets
    else:
        raise CliError("complexity needs --hardware or --chiplets")
    v = complexity_estimate(counts, n)
    print(f"layers {counts} on {n} chiplets: log10(schedules) = {v:.6f} (about 10^{v:.1f})")
    verdict = "enumerable at desk scale" if v <= ENUMERABLE_LOG10 else "too large to enumerate; use heuristics"
    print(f"verdict: {verdict}")
    ref = REFERENCE_ESTIMATES.get((tuple(sorted(counts)), n))
    if ref is not None:
        print(f"published estimate for this case: O(10^{ref}); this estimate: 10^{v:.1f}")
    return 0


def cmd_pareto(args) -> int:
    src = Path(args.results) / "window_points.csv"
    if not src.exists():
        raise CliError(f"window points not found: {src}")
    text = frontier_csv(frontier_from_window_points(parse_window_points(src.read_text())))
    if args.out:
        write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"schedule": cmd_schedule, "evaluate": cmd_evaluate, "complexity": cmd_complexity, "pareto": cmd_pareto}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, WorkloadError, HardwareError, CostError, ScheduleError, SearchError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
