"""Public simulation interface: replay a trace under a depth assignment.

``simulate`` reports latency, deadlock state, and per-FIFO peak occupancy
and stall cycles.  ``Evaluator`` amortizes trace preprocessing across many
configurations; ``evaluate_many`` adds optional thread parallelism (the
compiled kernel releases the GIL).  ``detect_deadlock_cycle`` turns a
deadlocked result into a wait-for chain for diagnostics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from . import engine
from .bram import is_shift_register
from .trace import FifoConfig, TraceProgram


class TimingMode(Enum):
    """Read timing model.

    UNIFORM charges every FIFO a one-cycle read delay.  DEPTH_AWARE charges
    two cycles for FIFOs large enough to be BRAM-implemented at their
    configured depth, one cycle for shift-register FIFOs; under that mode
    shrinking a FIFO can genuinely reduce latency.
    """

    UNIFORM = "uniform"
    DEPTH_AWARE = "depth-aware"


@dataclass(frozen=True, slots=True)
class BlockedOp:
    task: int
    fifo: int
    reason: str  # "full" | "empty"


@dataclass(frozen=True, slots=True)
class DeadlockInfo:
    cycle: int
    blocked: tuple[BlockedOp, ...]


@dataclass(frozen=True, slots=True)
class SimResult:
    latency: int
    deadlocked: bool
    deadlock_info: Optional[DeadlockInfo]
    peak_occupancy: tuple[int, ...]
    stall_cycles: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class WaitLink:
    """One edge of a wait-for chain: ``task`` is blocked on ``fifo``
    (which is full or empty) and can only be released by ``waits_for``."""

    task: int
    fifo: int
    reason: str
    waits_for: Optional[int]


@dataclass(frozen=True, slots=True)
class WaitForCycle:
    cyclic: bool
    links: tuple[WaitLink, ...]


REASON_NAMES = {engine.REASON_EMPTY: "empty", engine.REASON_FULL: "full"}


def check_config(program: TraceProgram, config: FifoConfig) -> None:
    """Validate a depth assignment against a program.

    The replay engines accept any physical depth >= 1; the depth >= 2
    floor of the optimization space is enforced where configs are built
    (FifoConfig.from_mapping, baselines, searches).
    """
    if len(config.depths) != len(program.fifos):
        raise ValueError(
            f"config has {len(config.depths)} depths for {len(program.fifos)} FIFOs")
    for f in program.fifos:
        d = config.depths[f.id]
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
            raise ValueError(f"FIFO '{f.name}': depth must be an integer >= 1, got {d!r}")


def read_latencies(program: TraceProgram, config: FifoConfig, mode: TimingMode) -> np.ndarray:
    lat = np.ones(len(program.fifos), dtype=np.int64)
    if mode is TimingMode.DEPTH_AWARE:
        for f in program.fifos:
            if not is_shift_register(config.depths[f.id], f.bitwidth):
                lat[f.id] = 2
    return lat


class Evaluator:
    """Replays one program under many depth assignments."""

    def __init__(self, program: TraceProgram, mode: TimingMode = TimingMode.UNIFORM):
        self.program = program
        self.mode = mode
        self._ct = engine.compile_trace(program)

    def evaluate(self, config: FifoConfig) -> SimResult:
        check_config(self.program, config)
        depths = np.asarray(config.depths, dtype=np.int64)
        read_lat = read_latencies(self.program, config, self.mode)
        return self._run(depths, read_lat)

    def _run(self, depths: np.ndarray, read_lat: np.ndarray) -> SimResult:
        ct = self._ct
        latency, deadlocked, dl_cycle, stall, peak, blocked_f, blocked_kind = engine._replay(
            ct.ev_kind, ct.ev_arg, ct.task_off, ct.fifo_producer, ct.fifo_consumer,
            ct.w_off, ct.r_off, depths, read_lat)
        info = None
        if deadlocked:
            blocked = tuple(
                BlockedOp(i, int(blocked_f[i]), REASON_NAMES[int(blocked_kind[i])])
                for i in range(ct.n_tasks) if blocked_f[i] >= 0
            )
            info = DeadlockInfo(int(dl_cycle), blocked)
        return SimResult(
            latency=int(latency),
            deadlocked=bool(deadlocked),
            deadlock_info=info,
            peak_occupancy=tuple(int(x) for x in peak),
            stall_cycles=tuple(int(x) for x in stall),
        )

    def evaluate_many(self, configs: Sequence[FifoConfig],
                      jobs: Optional[int] = None) -> list[SimResult]:
        configs = list(configs)
        if jobs is None or jobs <= 1 or len(configs) < 2:
            return [self.evaluate(c) for c in configs]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(self.evaluate, configs))


def simulate(program: TraceProgram, config: FifoConfig,
             mode: TimingMode = TimingMode.UNIFORM) -> SimResult:
    """Replay ``program`` with the given per-FIFO depths.

    Deterministic: equal inputs produce equal results, regardless of task
    declaration order or worker counts.  For a deadlocked run the reported
    latency is the cycle at which progress stopped, and ``deadlock_info``
    lists every task stuck on a full or empty FIFO at that point.
    """
    return Evaluator(program, mode).evaluate(config)


def evaluate_many(program: TraceProgram, configs: Iterable[FifoConfig],
                  mode: TimingMode = TimingMode.UNIFORM,
                  jobs: Optional[int] = None) -> list[SimResult]:
    """Batch simulate; element-wise identical to a loop of simulate calls."""
    return Evaluator(program, mode).evaluate_many(list(configs), jobs=jobs)


def detect_deadlock_cycle(result: SimResult, program: TraceProgram) -> WaitForCycle:
    """Extract the wait-for structure behind a deadlock.

    Each blocked task waits for the opposite endpoint of its FIFO: the
    consumer when blocked on a full FIFO, the producer when blocked on an
    empty one.  Returns the cyclic chain when one exists (starting from its
    smallest task id), otherwise the whole blocked set (starvation on tasks
    that already finished).
    """
    if not result.deadlocked or result.deadlock_info is None:
        raise ValueError("result is not deadlocked")

    edges: dict[int, tuple[int, str, Optional[int]]] = {}
    for b in result.deadlock_info.blocked:
        decl = program.fifos[b.fifo]
        target = decl.consumer_task if b.reason == "full" else decl.producer_task
        edges[b.task] = (b.fifo, b.reason, target)

    resolved: set[int] = set()
    for start in sorted(edges):
        if start in resolved:
            continue
        path: list[int] = []
        pos: dict[int, int] = {}
        node: Optional[int] = start
        while node is not None and node in edges and node not in resolved and node not in pos:
            pos[node] = len(path)
            path.append(node)
            node = edges[node][2]
        if node is not None and node in pos:
            cycle = path[pos[node]:]
            k = cycle.index(min(cycle))
            cycle = cycle[k:] + cycle[:k]
            links = tuple(WaitLink(tk, edges[tk][0], edges[tk][1], edges[tk][2]) for tk in cycle)
            return WaitForCycle(cyclic=True, links=links)
        resolved.update(path)

    links = tuple(WaitLink(tk, edges[tk][0], edges[tk][1], edges[tk][2]) for tk in sorted(edges))
    return WaitForCycle(cyclic=False, links=links)
