"""Command-line interface.

Subcommands: ``validate``, ``simulate``, ``breakpoints``, ``optimize``,
``benchgen``.  Output files and stdout are machine-readable (JSON/CSV)
and byte-identical across reruns with the same arguments; human-oriented
progress, warnings, and wall-clock timings go to stderr.

Exit codes: 0 success, 1 I/O error, 2 validation error, 3 usage error.
Set ``FIFO_ADVISOR_LOG`` (DEBUG/INFO/WARNING/ERROR) to adjust logging.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional

from .benchgen import BenchSpec, generate, generate_suite
from .bram import config_bram_count, fifo_bram_count, program_breakpoints
from .optimize import (OPTIMIZERS, EvaluatedPoint, SearchBudget, baseline_max,
                       baseline_min, score)
from .sim import (Evaluator, SimResult, TimingMode, detect_deadlock_cycle,
                  simulate)
from .trace import (FifoConfig, TraceError, TraceProgram, parse_config_json,
                    parse_trace, serialize_trace, upper_bounds, write_counts)

log = logging.getLogger("fifo_advisor")

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_USAGE = 3


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; this tool reserves 2 for
    validation failures, so usage errors exit 3 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alpha_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("alpha must be within [0, 1]")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("value must be >= 1")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("value must be >= 0")
    return value


def _load_program(path: str) -> TraceProgram:
    return parse_trace(Path(path).read_text())


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    program = _load_program(args.trace)
    bounds = upper_bounds(program)
    writes = write_counts(program)
    print(f"program {program.name}: {len(program.tasks)} tasks, {len(program.fifos)} fifos")
    for fifo in program.fifos:
        extra = ""
        if fifo.declared_depth is not None:
            extra += f" depth={fifo.declared_depth}"
        if fifo.group is not None:
            extra += f" group={fifo.group}"
        print(f"  fifo {fifo.name}: width={fifo.bitwidth} writes={writes[fifo.id]} "
              f"upper={bounds[fifo.id]}{extra}")
    for task in program.tasks:
        print(f"  task {task.name}: {len(task.events)} events")
    return EXIT_OK


def _config_from_args(program: TraceProgram, args) -> FifoConfig:
    if args.config is not None:
        return parse_config_json(Path(args.config).read_text(), program)
    if args.baseline == "min":
        return baseline_min(program)
    return baseline_max(program)


def _simulation_report(program: TraceProgram, config: FifoConfig,
                       result: SimResult, mode: TimingMode) -> dict:
    report = {
        "program": program.name,
        "mode": mode.value,
        "latency": result.latency,
        "deadlocked": result.deadlocked,
        "bram": config_bram_count(program, config),
        "fifos": [
            {
                "name": fifo.name,
                "depth": config.depths[fifo.id],
                "bram": fifo_bram_count(config.depths[fifo.id], fifo.bitwidth),
                "peak_occupancy": result.peak_occupancy[fifo.id],
                "stall_cycles": result.stall_cycles[fifo.id],
            }
            for fifo in program.fifos
        ],
        "deadlock": None,
    }
    if result.deadlocked:
        chain = detect_deadlock_cycle(result, program)
        report["deadlock"] = {
            "cycle": result.deadlock_info.cycle,
            "blocked": [
                {"task": program.tasks[b.task].name,
                 "fifo": program.fifos[b.fifo].name,
                 "reason": b.reason}
                for b in result.deadlock_info.blocked
            ],
            "wait_chain": {
                "cyclic": chain.cyclic,
                "links": [
                    {"task": program.tasks[l.task].name,
                     "fifo": program.fifos[l.fifo].name,
                     "reason": l.reason,
                     "waits_for": None if l.waits_for is None
                     else program.tasks[l.waits_for].name}
                    for l in chain.links
                ],
            },
        }
    return report


def cmd_simulate(args) -> int:
    program = _load_program(args.trace)
    config = _config_from_args(program, args)
    mode = TimingMode(args.mode)
    result = simulate(program, config, mode)
    sys.stdout.write(_json_dump(_simulation_report(program, config, result, mode)))
    return EXIT_OK


def cmd_breakpoints(args) -> int:
    program = _load_program(args.trace)
    table = {fifo.name: cands
             for fifo, cands in zip(program.fifos, program_breakpoints(program))}
    sys.stdout.write(_json_dump(table))
    return EXIT_OK


def _point_json(program: TraceProgram, point: EvaluatedPoint) -> dict:
    return {
        "depths": {f.name: point.config.depths[f.id] for f in program.fifos},
        "latency": None if math.isinf(point.latency) else point.latency,
        "bram": point.bram,
        "feasible": point.feasible,
    }


def _sim_point(program: TraceProgram, config: FifoConfig, result: SimResult) -> EvaluatedPoint:
    return EvaluatedPoint(
        config=config,
        latency=result.latency if not result.deadlocked else math.inf,
        bram=config_bram_count(program, config),
        feasible=not result.deadlocked,
    )


def cmd_optimize(args) -> int:
    program = _load_program(args.trace)
    mode = TimingMode(args.mode)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    budget = SearchBudget(max_evaluations=args.budget, seed=args.seed,
                          beta_count=args.beta_count, epsilon=args.epsilon)
    names = list(OPTIMIZERS) if args.optimizer == "all" else [args.optimizer]

    evaluator = Evaluator(program, mode)
    max_cfg, min_cfg = baseline_max(program), baseline_min(program)
    base_max = _sim_point(program, max_cfg, evaluator.evaluate(max_cfg))
    base_min = _sim_point(program, min_cfg, evaluator.evaluate(min_cfg))

    csv_rows = []
    summary_opts = {}
    for name in names:
        fn = OPTIMIZERS[name]
        kwargs = {"jobs": args.jobs}
        if name in ("sa", "grouped-sa"):
            kwargs["raw_scalarization"] = args.raw_scalarization
        started = time.perf_counter()
        result = fn(program, budget, mode, **kwargs)
        elapsed = time.perf_counter() - started
        print(f"{name}: {len(result.evaluations)} evaluations in {elapsed:.2f}s, "
              f"{len(result.frontier.points)} frontier points", file=sys.stderr)
        if not result.frontier.points:
            print(f"warning: {name} found no feasible point", file=sys.stderr)

        def scored(point: EvaluatedPoint) -> dict:
            doc = _point_json(program, point)
            for label, base in (("score_vs_max", base_max), ("score_vs_min", base_min)):
                value = score(point, base, args.alpha) if base.feasible else None
                doc[label] = value if value is not None and math.isfinite(value) else None
            return doc

        hl = None
        hl_json = None
        if result.frontier.points and base_max.feasible:
            hl = min(result.frontier.points,
                     key=lambda p: (score(p, base_max, args.alpha), p.latency, p.bram))
            hl_json = scored(hl)
        frontier_doc = {
            "optimizer": name,
            "program": program.name,
            "mode": mode.value,
            "seed": budget.seed,
            "alpha": args.alpha,
            "evaluations": len(result.evaluations),
            "points": [scored(p) for p in result.frontier.points],
            "highlight": hl_json,
        }
        (out_dir / f"frontier_{name}.json").write_text(_json_dump(frontier_doc))

        for idx, point in enumerate(result.evaluations):
            csv_rows.append([
                name, idx, int(point.feasible),
                "" if math.isinf(point.latency) else point.latency,
                point.bram,
                " ".join(str(d) for d in point.config.depths),
            ])

        entry = {
            "evaluations": len(result.evaluations),
            "deadlocked_evaluations": sum(1 for p in result.evaluations if not p.feasible),
            "frontier_size": len(result.frontier.points),
            "highlight": hl_json,
        }
        if hl is not None:
            entry["latency_ratio"] = (None if base_max.latency == 0
                                      else hl.latency / base_max.latency)
            entry["bram_reduction"] = (None if base_max.bram == 0
                                       else 1.0 - hl.bram / base_max.bram)
            entry["un_deadlocked"] = not base_min.feasible
        summary_opts[name] = entry

    with (out_dir / "evaluations.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["optimizer", "index", "feasible", "latency", "bram", "depths"])
        writer.writerows(csv_rows)

    summary = {
        "program": program.name,
        "mode": mode.value,
        "budget": budget.max_evaluations,
        "seed": budget.seed,
        "alpha": args.alpha,
        "baseline_max": _point_json(program, base_max),
        "baseline_min": _point_json(program, base_min),
        "optimizers": summary_opts,
    }
    (out_dir / "summary.json").write_text(_json_dump(summary))
    return EXIT_OK


def cmd_benchgen(args) -> int:
    if args.suite is not None:
        for path in generate_suite(args.suite):
            print(path)
        return EXIT_OK
    spec = BenchSpec(pattern=args.pattern, tokens=args.tokens,
                     widths=tuple(args.widths), stages=args.stages,
                     fanout=args.fanout, lanes=args.lanes, tasks=args.tasks,
                     fifos=args.fifos, seed=args.seed, grouping=args.grouped,
                     name=args.name)
    program = generate(spec)
    Path(args.out).write_text(serialize_trace(program))
    print(args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="fifo-advisor",
                             description="FIFO depth design-space exploration toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_ArgumentParser)

    p_val = sub.add_parser("validate", help="parse a trace and print its summary")
    p_val.add_argument("trace")
    p_val.set_defaults(func=cmd_validate)

    p_sim = sub.add_parser("simulate", help="replay a trace under one configuration")
    p_sim.add_argument("trace")
    group = p_sim.add_mutually_exclusive_group()
    group.add_argument("--config", help="JSON file with {\"depths\": {fifo: depth}}")
    group.add_argument("--baseline", choices=("max", "min"), default="max")
    p_sim.add_argument("--mode", choices=("uniform", "depth-aware"), default="uniform")
    p_sim.set_defaults(func=cmd_simulate)

    p_bp = sub.add_parser("breakpoints", help="print candidate depths per FIFO")
    p_bp.add_argument("trace")
    p_bp.set_defaults(func=cmd_breakpoints)

    p_opt = sub.add_parser("optimize", help="search depth configurations")
    p_opt.add_argument("trace")
    p_opt.add_argument("--optimizer", choices=(*OPTIMIZERS, "all"), default="all")
    p_opt.add_argument("--budget", type=_positive_int, default=1000)
    p_opt.add_argument("--seed", type=int, default=0)
    p_opt.add_argument("--beta-count", type=_positive_int, default=8)
    p_opt.add_argument("--epsilon", type=_nonneg_float, default=0.05)
    p_opt.add_argument("--alpha", type=_alpha_arg, default=0.7)
    p_opt.add_argument("--mode", choices=("uniform", "depth-aware"), default="uniform")
    p_opt.add_argument("--raw-scalarization", action="store_true",
                       help="anneal on unscaled latency/BRAM sums")
    p_opt.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1)
    p_opt.add_argument("--out", required=True, help="output directory")
    p_opt.set_defaults(func=cmd_optimize)

    p_gen = sub.add_parser("benchgen", help="generate synthetic benchmarks")
    target = p_gen.add_mutually_exclusive_group(required=True)
    target.add_argument("--suite", help="write the standard suite to this directory")
    target.add_argument("--out", help="output trace file for a single benchmark")
    p_gen.add_argument("--pattern", choices=("write-then-read", "chain", "tree",
                                             "ring", "random-dag"))
    p_gen.add_argument("--tokens", type=_positive_int, default=16)
    p_gen.add_argument("--widths", type=_positive_int, nargs="+", default=[32],
                       metavar="BITS", help="bit-widths cycled over FIFOs")
    p_gen.add_argument("--stages", type=_positive_int, default=4)
    p_gen.add_argument("--fanout", type=_positive_int, default=2)
    p_gen.add_argument("--lanes", type=_positive_int, default=1)
    p_gen.add_argument("--tasks", type=_positive_int, default=8)
    p_gen.add_argument("--fifos", type=_positive_int, default=12)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--grouped", action="store_true",
                       help="tag generated FIFOs with per-level groups")
    p_gen.add_argument("--name", help="program name inside the trace")
    p_gen.set_defaults(func=cmd_benchgen)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("FIFO_ADVISOR_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[list[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is cmd_benchgen and args.suite is None and args.pattern is None:
        parser.error("--pattern is required unless --suite is given")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
