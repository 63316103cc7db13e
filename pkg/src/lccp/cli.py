"""Command-line front end.

Subcommands:
  solve     solve one instance and print a JSON report
  validate  check a solution file against an instance
  generate  write random instances
  oracle    compare the solver with brute force on a small instance
  bench     run ablation variants over a directory of instances
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bnb import OPTIMAL, TIMEOUT, solve
from .config import COVER, PARTITION, VARIANT_NAMES, SolverConfig, variant
from .instance import (
    Instance,
    dump_instance,
    generate_euclidean,
    generate_uniform,
    load_instance,
    load_solution,
    metric_closure,
    triangle_violation,
    validate_partition,
)

log = logging.getLogger("lccp")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIMEOUT = 2

BENCH_SHIFT_S = 1.0

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["instance", "config", "status", "objective", "lower_bound", "root_lp",
                 "cycles", "stats", "wall_time"],
    "properties": {
        "instance": {
            "type": "object",
            "required": ["name", "n", "metric"],
            "properties": {
                "name": {"type": "string"},
                "n": {"type": "integer", "minimum": 1},
                "metric": {"type": "boolean"},
            },
        },
        "config": {"type": "object"},
        "status": {"enum": [OPTIMAL, TIMEOUT]},
        "objective": {"type": "integer", "minimum": 1},
        "lower_bound": {"type": ["integer", "null"], "minimum": 0},
        "root_lp": {"type": ["number", "null"]},
        "cycles": {
            "type": "array",
            "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        },
        "stats": {"type": "object"},
        "wall_time": {"type": "number", "minimum": 0},
    },
}

# fields that vary between identical runs
TIMING_FIELDS = ("wall_time",)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def shifted_geomean(times: Sequence[float], shift: float = BENCH_SHIFT_S) -> float:
    """exp(mean(log(t + shift))) - shift; nan for an empty sequence."""
    if not len(times):
        return math.nan
    arr = np.asarray(times, dtype=float)
    return float(np.exp(np.mean(np.log(arr + shift))) - shift)


def _config_from_args(args) -> SolverConfig:
    return SolverConfig(
        mode=args.mode,
        bidirectional=args.bidirectional,
        symmetry_sort=args.symmetry_sort,
        symmetry_breaking=args.symmetry_sort,
        early_branching=args.early_branching,
        heuristic_pricing=args.heuristic_pricing,
        workers=args.workers,
        time_limit_s=args.time_limit,
        max_columns_per_round=args.max_columns,
        seed=args.seed,
    )


def _read_instance(path: str, fmt: str, closure: bool) -> Instance:
    inst = load_instance(path, format=fmt, name=Path(path).name)
    if closure:
        inst = metric_closure(inst)
    elif not inst.is_metric and triangle_violation(inst.travel) is None:
        inst = Instance(inst.travel, inst.crit, True, inst.name)
    return inst


def build_report(inst: Instance, cfg: SolverConfig, result) -> dict:
    part, stats, status = result
    return {
        "instance": {"name": inst.name, "n": inst.n, "metric": bool(inst.is_metric)},
        "config": {k: (v if not (isinstance(v, float) and math.isinf(v)) else None)
                   for k, v in dataclasses.asdict(cfg).items()},
        "status": status,
        "objective": part.objective,
        "lower_bound": stats.lower_bound,
        "root_lp": stats.root_lp,
        "cycles": [list(c.nodes) for c in part.cycles],
        "stats": {k: v for k, v in stats.to_dict().items() if k != "wall_time"},
        "wall_time": stats.wall_time,
    }


def _fail(message) -> int:
    # user-facing errors go straight to stderr, independent of the logging setup
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _write_text(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_solve(args) -> int:
    try:
        inst = _read_instance(args.instance, args.format, args.metric_closure)
        cfg = _config_from_args(args)
        result = solve(inst, cfg)
    except (OSError, ValueError) as exc:
        return _fail(exc)
    report = build_report(inst, cfg, result)
    _write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", args.output)
    log.info("%s: status %s, %d cycles, %.3f s", inst.name, result.status,
             result.partition.objective, result.stats.wall_time)
    return EXIT_OK if result.status == OPTIMAL else EXIT_TIMEOUT


def cmd_validate(args) -> int:
    try:
        inst = load_instance(args.instance, format=args.format)
        cycles = load_solution(args.solution)
    except (OSError, ValueError) as exc:
        return _fail(exc)
    verdict = validate_partition(inst, cycles)
    if verdict:
        print(f"valid: {len(cycles)} cycles", file=sys.stderr)
        return EXIT_OK
    print(f"invalid: {verdict.message}", file=sys.stderr)
    return EXIT_ERROR


def cmd_generate(args) -> int:
    def make(seed: int) -> Instance:
        if args.kind == "euclidean":
            return generate_euclidean(args.n, seed, args.coord_range, args.crit_low, args.crit_high)
        return generate_uniform(args.n, seed, args.time_low, args.time_high, args.crit_low, args.crit_high)

    try:
        if args.count == 1:
            buf = io.StringIO()
            dump_instance(make(args.seed), buf, args.format)
            _write_text(buf.getvalue(), args.output)
            return EXIT_OK
        if not args.output:
            return _fail("--count > 1 needs --output DIR")
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        suffix = "json" if args.format == "json" else "txt"
        for k in range(args.count):
            seed = args.seed + k
            with open(out / f"{args.kind}-n{args.n}-s{seed}.{suffix}", "w", encoding="utf-8") as fh:
                dump_instance(make(seed), fh, args.format)
    except (OSError, ValueError) as exc:
        return _fail(exc)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import full_lp_value, optimal_partition

    try:
        inst = _read_instance(args.instance, args.format, args.metric_closure)
        cfg = _config_from_args(args)
        expected = optimal_partition(inst)
        lp_value = full_lp_value(inst, covering=cfg.mode == COVER)
        result = solve(inst, cfg)
    except (OSError, ValueError) as exc:
        return _fail(exc)
    report = {
        "instance": inst.name,
        "oracle_objective": expected,
        "solver_objective": result.partition.objective,
        "solver_status": result.status,
        "full_lp": lp_value,
        "root_lp": result.stats.root_lp,
        "match": result.status == OPTIMAL and result.partition.objective == expected,
    }
    _write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", args.output)
    return EXIT_OK if report["match"] else EXIT_ERROR


def run_bench(paths: Sequence[Path], variants: Sequence[str], base: SolverConfig, fmt: str = "text",
              closure: bool = False) -> tuple[list[dict], dict[str, float]]:
    """Solve every instance with every variant; returns rows and per-variant shifted geomeans.

    Timeouts enter the mean at the time limit; failures are recorded and skipped.
    """
    rows = []
    for path in paths:
        try:
            inst = _read_instance(str(path), fmt, closure)
        except (OSError, ValueError) as exc:
            for v in variants:
                rows.append({"instance": path.name, "variant": v, "status": "error", "objective": None,
                             "time_s": None, "labels_generated": None, "nodes": None, "error": str(exc)})
            continue
        for v in variants:
            row = {"instance": path.name, "variant": v, "error": ""}
            try:
                res = solve(inst, variant(v, base))
                t = res.stats.wall_time
                if res.status == TIMEOUT and math.isfinite(base.time_limit_s):
                    t = base.time_limit_s
                row.update(status=res.status, objective=res.partition.objective, time_s=t,
                           labels_generated=res.stats.labels_generated, nodes=res.stats.nodes_processed)
            except Exception as exc:  # one failing instance must not abort the benchmark
                log.exception("%s with variant %s failed", path.name, v)
                row.update(status="error", objective=None, time_s=None, labels_generated=None, nodes=None,
                           error=str(exc))
            rows.append(row)
    means = {}
    for v in variants:
        times = [r["time_s"] for r in rows if r["variant"] == v and r["time_s"] is not None]
        means[v] = shifted_geomean(times)
    return rows, means


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        return _fail(f"{directory} is not a directory")
    paths = sorted(p for p in directory.iterdir() if p.is_file() and p.suffix in (".txt", ".json"))
    variants = args.variants or list(VARIANT_NAMES)
    base = _config_from_args(args)
    rows, means = run_bench(paths, variants, base, args.format, args.metric_closure)
    if args.table == "json":
        text = json.dumps({"rows": rows, "shifted_geomean_s": means}, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        fields = ["instance", "variant", "status", "objective", "time_s", "labels_generated", "nodes", "error"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        for v in variants:
            writer.writerow({"instance": "*shifted_geomean*", "variant": v, "time_s": means[v]})
        text = buf.getvalue()
    _write_text(text, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--mode", choices=(PARTITION, COVER), default=PARTITION)
    g.add_argument("--bidirectional", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--symmetry-sort", action=argparse.BooleanOptionalAction, default=True,
                   help="relabel nodes by critical time and restrict pricing starts accordingly")
    g.add_argument("--early-branching", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--heuristic-pricing", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--time-limit", type=float, default=math.inf, metavar="SECONDS")
    g.add_argument("--max-columns", type=int, default=50, help="columns added per pricing round")
    g.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric-closure", action="store_true",
                   help="replace travel times by shortest-path distances before solving")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lccp", description="Exact length-constrained cycle partitioning.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a solution file")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="write random instances")
    p.add_argument("--kind", choices=("euclidean", "uniform"), default="euclidean")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--coord-range", type=float, default=100.0)
    p.add_argument("--time-low", type=float, default=1.0)
    p.add_argument("--time-high", type=float, default=100.0)
    p.add_argument("--crit-low", type=float, default=100.0)
    p.add_argument("--crit-high", type=float, default=300.0)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o", help="file, or directory when --count > 1")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle", help="cross-check the solver against brute force (n <= 12)")
    p.add_argument("instance")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run ablation variants over a directory of instances")
    p.add_argument("directory")
    p.add_argument("--variants", nargs="+", choices=VARIANT_NAMES)
    p.add_argument("--format", choices=("text", "json"), default="text", help="instance file format")
    p.add_argument("--table", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_ERROR
