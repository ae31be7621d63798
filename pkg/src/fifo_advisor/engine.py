"""Compiled replay kernel.

Flattens a TraceProgram into numpy arrays once, then replays depth
assignments with a numba-compiled worklist scheduler.  Completion times of
channel operations form a unique fixpoint (each FIFO has a single producer
and a single consumer), so tasks can be advanced in any order: a task runs
until its next channel operation is not yet satisfiable, and is re-queued
when the opposite endpoint acts on that FIFO.

Semantics implemented here must match refsim.simulate_reference exactly;
the differential tests hold the two engines together.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from numba import njit

from .trace import Compute, Read, TraceProgram

EV_COMPUTE = 0
EV_READ = 1
EV_WRITE = 2

REASON_EMPTY = 0
REASON_FULL = 1


@dataclass
class CompiledTrace:
    n_tasks: int
    n_fifos: int
    ev_kind: np.ndarray   # int8[total events]
    ev_arg: np.ndarray    # int64[total events]
    task_off: np.ndarray  # int64[n_tasks + 1]
    fifo_producer: np.ndarray  # int64[n_fifos], -1 when unused
    fifo_consumer: np.ndarray  # int64[n_fifos], -1 when unused
    w_off: np.ndarray     # int64[n_fifos + 1], prefix sums of write counts
    r_off: np.ndarray     # int64[n_fifos + 1], prefix sums of read counts
    widths: np.ndarray    # int64[n_fifos]


_COMPILE_CACHE: "weakref.WeakKeyDictionary[TraceProgram, CompiledTrace]" = weakref.WeakKeyDictionary()


def compile_trace(program: TraceProgram) -> CompiledTrace:
    cached = _COMPILE_CACHE.get(program)
    if cached is not None:
        return cached

    n_tasks = len(program.tasks)
    n_fifos = len(program.fifos)
    total = sum(len(t.events) for t in program.tasks)
    ev_kind = np.empty(total, dtype=np.int8)
    ev_arg = np.empty(total, dtype=np.int64)
    task_off = np.zeros(n_tasks + 1, dtype=np.int64)
    writes = np.zeros(n_fifos, dtype=np.int64)
    reads = np.zeros(n_fifos, dtype=np.int64)

    pos = 0
    for t in program.tasks:
        task_off[t.task_id] = pos
        for ev in t.events:
            if isinstance(ev, Compute):
                ev_kind[pos] = EV_COMPUTE
                ev_arg[pos] = ev.cycles
            elif isinstance(ev, Read):
                ev_kind[pos] = EV_READ
                ev_arg[pos] = ev.fifo
                reads[ev.fifo] += 1
            else:
                ev_kind[pos] = EV_WRITE
                ev_arg[pos] = ev.fifo
                writes[ev.fifo] += 1
            pos += 1
    task_off[n_tasks] = pos

    producer = np.full(n_fifos, -1, dtype=np.int64)
    consumer = np.full(n_fifos, -1, dtype=np.int64)
    for f in program.fifos:
        if f.producer_task is not None:
            producer[f.id] = f.producer_task
        if f.consumer_task is not None:
            consumer[f.id] = f.consumer_task

    w_off = np.zeros(n_fifos + 1, dtype=np.int64)
    r_off = np.zeros(n_fifos + 1, dtype=np.int64)
    np.cumsum(writes, out=w_off[1:])
    np.cumsum(reads, out=r_off[1:])
    widths = np.array([f.bitwidth for f in program.fifos], dtype=np.int64)

    ct = CompiledTrace(n_tasks, n_fifos, ev_kind, ev_arg, task_off,
                       producer, consumer, w_off, r_off, widths)
    _COMPILE_CACHE[program] = ct
    return ct


@njit(cache=True, nogil=True)
def _replay(ev_kind, ev_arg, task_off, fifo_producer, fifo_consumer,
            w_off, r_off, depths, read_lat):
    """Replay one depth assignment.

    Timing rules (shared with the reference simulator):
      * every task starts at cycle 0; compute advances local time only
      * a write completes at the first cycle >= arrival with a free slot;
        the token becomes readable ``read_lat`` cycles after completion
        and its slot frees one cycle after the consuming read completes
      * a read completes at the first cycle >= arrival with a readable token
      * each completed read/write consumes one cycle of task time
    """
    n_tasks = task_off.size - 1
    n_fifos = depths.size
    total_w = w_off[n_fifos]
    total_r = r_off[n_fifos]

    w_times = np.empty(total_w, np.int64)
    r_times = np.empty(total_r, np.int64)
    writes_done = np.zeros(n_fifos, np.int64)
    reads_done = np.zeros(n_fifos, np.int64)
    stall = np.zeros(n_fifos, np.int64)

    pc = np.empty(n_tasks, np.int64)
    t = np.zeros(n_tasks, np.int64)
    blocked_f = np.full(n_tasks, -1, np.int64)
    blocked_kind = np.zeros(n_tasks, np.int8)
    stack = np.empty(n_tasks, np.int64)
    on_stack = np.zeros(n_tasks, np.uint8)

    sp = 0
    for i in range(n_tasks - 1, -1, -1):
        pc[i] = task_off[i]
        stack[sp] = i
        sp += 1
        on_stack[i] = 1

    last_progress = np.int64(-1)

    while sp > 0:
        sp -= 1
        task = stack[sp]
        on_stack[task] = 0
        blocked_f[task] = -1
        end = task_off[task + 1]
        while pc[task] < end:
            kind = ev_kind[pc[task]]
            arg = ev_arg[pc[task]]
            if kind == EV_COMPUTE:
                if t[task] > last_progress:
                    last_progress = t[task]
                t[task] += arg
                pc[task] += 1
            elif kind == EV_READ:
                i_r = reads_done[arg]
                if i_r >= writes_done[arg]:
                    blocked_f[task] = arg
                    blocked_kind[task] = REASON_EMPTY
                    break
                c = w_times[w_off[arg] + i_r] + read_lat[arg]
                if c < t[task]:
                    c = t[task]
                stall[arg] += c - t[task]
                r_times[r_off[arg] + i_r] = c
                reads_done[arg] = i_r + 1
                t[task] = c + 1
                pc[task] += 1
                if c > last_progress:
                    last_progress = c
                p = fifo_producer[arg]
                if p >= 0 and blocked_f[p] == arg and on_stack[p] == 0:
                    stack[sp] = p
                    sp += 1
                    on_stack[p] = 1
            else:
                j = writes_done[arg]
                d = depths[arg]
                c = t[task]
                if j >= d:
                    if reads_done[arg] <= j - d:
                        blocked_f[task] = arg
                        blocked_kind[task] = REASON_FULL
                        break
                    c2 = r_times[r_off[arg] + (j - d)] + 1
                    if c2 > c:
                        c = c2
                stall[arg] += c - t[task]
                w_times[w_off[arg] + j] = c
                writes_done[arg] = j + 1
                t[task] = c + 1
                pc[task] += 1
                if c > last_progress:
                    last_progress = c
                q = fifo_consumer[arg]
                if q >= 0 and blocked_f[q] == arg and on_stack[q] == 0:
                    stack[sp] = q
                    sp += 1
                    on_stack[q] = 1

    deadlocked = False
    for i in range(n_tasks):
        if pc[i] < task_off[i + 1]:
            deadlocked = True
            break

    latency = np.int64(0)
    dl_cycle = np.int64(-1)
    if deadlocked:
        # quiescence cycle: one past the last completed action, but no earlier
        # than the arrival of any stuck task at its blocking operation
        dl_cycle = last_progress + 1
        if dl_cycle < 0:
            dl_cycle = 0
        for i in range(n_tasks):
            if pc[i] < task_off[i + 1] and t[i] > dl_cycle:
                dl_cycle = t[i]
        for i in range(n_tasks):
            if pc[i] < task_off[i + 1]:
                stall[blocked_f[i]] += dl_cycle - t[i]
        latency = dl_cycle
    else:
        for i in range(n_tasks):
            if t[i] > latency:
                latency = t[i]

    # peak occupancy: merge writes (+1 at completion) with slot frees
    # (-1 one cycle after the read completes); frees apply first on ties
    peak = np.zeros(n_fifos, np.int64)
    for f in range(n_fifos):
        wi = np.int64(0)
        ri = np.int64(0)
        occ = np.int64(0)
        nw = writes_done[f]
        nr = reads_done[f]
        while wi < nw:
            wt = w_times[w_off[f] + wi]
            if ri < nr and r_times[r_off[f] + ri] + 1 <= wt:
                occ -= 1
                ri += 1
            else:
                occ += 1
                wi += 1
                if occ > peak[f]:
                    peak[f] = occ
    return latency, deadlocked, dl_cycle, stall, peak, blocked_f, blocked_kind
