"""Cycle-stepped reference simulator.

This is the normative definition of the replay semantics: a literal
per-cycle sweep over all tasks, kept as simple as possible so it can be
audited by hand.  The production engine must agree with it exactly; the
differential test suite compares the two on generated corpora and fuzzed
programs.

Semantics, per global cycle T:
  * a task whose local time t <= T attempts its next event;
  * Compute(k) advances local time by k (zero-cycle computes chain within
    the same cycle);
  * Write(f) needs a free slot: occupancy counts tokens already written
    whose slot has not freed; a slot frees one cycle after its read
    completes.  On success the token's write time is T and the task's
    local time becomes T + 1.
  * Read(f) needs the oldest unread token to have been written at least
    ``read_lat`` cycles before T.  On success local time becomes T + 1
    and the slot frees at T + 1.
  * stall cycles per FIFO accumulate as (completion - arrival) of each
    blocking operation, plus (stall cycle - arrival) for operations still
    blocked when the program deadlocks.

All blocking predicates depend on timestamps of earlier cycles only, so
results do not depend on the order tasks are visited within a cycle
(verified by the task_order parameter in tests).

Deadlock is quiescence: no task progressed this cycle, every unfinished
task is at an unsatisfiable channel operation, and no pending token or
slot release lies in the future.  The reported latency of a deadlocked
run is that stall cycle, not a completion time.
"""

from __future__ import annotations

from collections import deque
from typing import Optional, Sequence

from .sim import (BlockedOp, DeadlockInfo, SimResult, TimingMode, check_config,
                  read_latencies)
from .trace import Compute, FifoConfig, Read, TraceProgram, Write


def simulate_reference(program: TraceProgram, config: FifoConfig,
                       mode: TimingMode = TimingMode.UNIFORM,
                       task_order: Optional[Sequence[int]] = None) -> SimResult:
    check_config(program, config)
    depths = config.depths
    read_lat = read_latencies(program, config, mode)

    n_tasks = len(program.tasks)
    n_fifos = len(program.fifos)
    events = [t.events for t in program.tasks]
    order = list(task_order) if task_order is not None else list(range(n_tasks))
    if sorted(order) != list(range(n_tasks)):
        raise ValueError("task_order must be a permutation of task ids")

    pc = [0] * n_tasks
    t = [0] * n_tasks
    unread: list[deque[int]] = [deque() for _ in range(n_fifos)]
    last_read = [-1] * n_fifos
    peak = [0] * n_fifos
    stall = [0] * n_fifos

    T = 0
    while True:
        progressed = False
        for task in order:
            evs = events[task]
            while pc[task] < len(evs) and t[task] <= T:
                ev = evs[pc[task]]
                if isinstance(ev, Compute):
                    t[task] += ev.cycles
                    pc[task] += 1
                    progressed = True
                elif isinstance(ev, Read):
                    q = unread[ev.fifo]
                    if q and q[0] + read_lat[ev.fifo] <= T:
                        q.popleft()
                        last_read[ev.fifo] = T
                        stall[ev.fifo] += T - t[task]
                        t[task] = T + 1
                        pc[task] += 1
                        progressed = True
                    else:
                        break
                else:
                    occ = len(unread[ev.fifo]) + (1 if last_read[ev.fifo] == T else 0)
                    if occ < depths[ev.fifo]:
                        unread[ev.fifo].append(T)
                        if occ + 1 > peak[ev.fifo]:
                            peak[ev.fifo] = occ + 1
                        stall[ev.fifo] += T - t[task]
                        t[task] = T + 1
                        pc[task] += 1
                        progressed = True
                    else:
                        break

        unfinished = [i for i in range(n_tasks) if pc[i] < len(events[i])]
        if not unfinished:
            return SimResult(
                latency=max(t, default=0),
                deadlocked=False,
                deadlock_info=None,
                peak_occupancy=tuple(peak),
                stall_cycles=tuple(stall),
            )
        if progressed:
            T += 1
            continue

        # nothing moved this cycle: find the earliest future wake-up
        wakes = []
        for i in unfinished:
            if t[i] > T:
                wakes.append(t[i])  # still computing
                continue
            ev = events[i][pc[i]]
            if isinstance(ev, Read):
                q = unread[ev.fifo]
                if q:
                    wakes.append(q[0] + read_lat[ev.fifo])  # token in flight
            else:
                if last_read[ev.fifo] + 1 > T:
                    wakes.append(last_read[ev.fifo] + 1)  # slot freeing
        if wakes:
            T = min(wakes)
            continue

        # quiescent: deadlock at cycle T
        blocked = []
        for i in unfinished:
            ev = events[i][pc[i]]
            fifo = ev.fifo
            reason = "empty" if isinstance(ev, Read) else "full"
            blocked.append(BlockedOp(i, fifo, reason))
            stall[fifo] += T - t[i]
        return SimResult(
            latency=T,
            deadlocked=True,
            deadlock_info=DeadlockInfo(T, tuple(blocked)),
            peak_occupancy=tuple(peak),
            stall_cycles=tuple(stall),
        )
