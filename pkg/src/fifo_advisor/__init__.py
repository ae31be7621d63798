"""FIFO depth design-space exploration toolkit.

Parses dataflow execution traces, replays them under candidate FIFO
depth assignments with a blocking-queue simulator, prices each
assignment in BRAM blocks, prunes the search to cost-breakpoint depths,
and searches the latency/BRAM trade-off with several strategies.
"""

from .benchgen import SUITE, BenchSpec, generate, generate_suite
from .bram import (BRAM_SHAPES, SHIFT_REGISTER_BITS, breakpoints,
                   config_bram_count, fifo_bram_count, is_shift_register,
                   program_breakpoints)
from .optimize import (OPTIMIZERS, EvaluatedPoint, ParetoFrontier, SearchBudget,
                       SearchResult, baseline_max, baseline_min, greedy_search,
                       grouped_random_search, grouped_simulated_annealing,
                       highlight, hypervolume, pareto_filter, random_search,
                       score, simulated_annealing)
from .sim import (BlockedOp, DeadlockInfo, Evaluator, SimResult, TimingMode,
                  WaitForCycle, WaitLink, detect_deadlock_cycle, evaluate_many,
                  simulate)
from .trace import (MIN_DEPTH, Compute, Event, FifoConfig, FifoDecl, Read,
                    TaskTrace, TraceError, TraceProgram, TraceSemanticError,
                    TraceSyntaxError, Write, build_program, config_to_json,
                    fifo_groups, parse_config_json, parse_trace,
                    serialize_trace, upper_bounds)

__version__ = "0.1.0"

__all__ = [
    "BRAM_SHAPES", "BenchSpec", "BlockedOp", "Compute", "DeadlockInfo",
    "EvaluatedPoint", "Evaluator", "Event", "FifoConfig", "FifoDecl",
    "MIN_DEPTH", "OPTIMIZERS", "ParetoFrontier", "Read", "SHIFT_REGISTER_BITS",
    "SUITE", "SearchBudget", "SearchResult", "SimResult", "TaskTrace",
    "TimingMode", "TraceError", "TraceProgram", "TraceSemanticError",
    "TraceSyntaxError", "WaitForCycle", "WaitLink", "Write", "baseline_max",
    "baseline_min", "breakpoints", "build_program", "config_bram_count",
    "config_to_json", "detect_deadlock_cycle", "evaluate_many", "fifo_groups",
    "fifo_bram_count", "generate", "generate_suite", "greedy_search",
    "grouped_random_search", "grouped_simulated_annealing", "highlight",
    "hypervolume", "is_shift_register", "parse_config_json", "parse_trace",
    "pareto_filter", "program_breakpoints", "random_search", "score",
    "serialize_trace", "simulate", "simulated_annealing", "upper_bounds",
    "__version__",
]
