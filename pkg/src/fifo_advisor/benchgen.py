"""Synthetic dataflow benchmark generator.

Five trace patterns with known structural properties:

* ``write-then-read``: two tasks; the producer emits every token on the
  first FIFO before touching the second, while the consumer alternates
  reads across both.  The first FIFO must buffer all but one token, so
  the minimum feasible depth sits exactly at ``n - 1``.
* ``chain``: a linear pipeline, optionally with several parallel FIFO
  lanes per hop.  The sink stage is strictly the slowest, which makes
  end-to-end latency independent of FIFO depths.
* ``tree``: a reduction tree draining into a strictly-slowest root, also
  depth-invariant.
* ``ring``: a cycle of tasks whose head writes its whole stream before
  reading anything back, so small depths wedge the ring into an all-full
  wait cycle.
* ``random-dag``: random forward edges (producer id < consumer id) with
  shuffled per-task event interleaving.  Forward edges keep the
  all-upper-bound configuration deadlock free.

With ``grouping`` enabled, stage-parallel FIFOs share a group tag: the
lanes of each chain hop, and all edges of each tree level.

Generators are deterministic in ``BenchSpec.seed``; regenerating a suite
produces byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .trace import (Compute, Event, FifoDecl, Read, TaskTrace, TraceProgram,
                    Write, build_program, serialize_trace)

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class BenchSpec:
    """Parameters for one generated benchmark.

    ``stages`` is the pipeline length for chains, the number of non-root
    levels for trees, and the task count for rings.  ``lanes`` is the
    number of parallel FIFOs per chain hop; ``fanout`` the tree arity;
    ``tasks``/``fifos`` size the random DAG.  ``widths`` is cycled over
    FIFOs in id order.  Compute jitter is drawn uniformly from
    ``[compute_jitter[0], compute_jitter[1])``.  ``n`` is the token
    count for ``write-then-read`` (falls back to ``tokens``).
    """

    pattern: str
    stages: int = 4
    fanout: int = 2
    lanes: int = 1
    tokens: int = 16
    widths: tuple[int, ...] = (32,)
    compute_jitter: tuple[int, int] = (0, 3)
    n: Optional[int] = None
    tasks: int = 8
    fifos: int = 12
    seed: int = 0
    grouping: bool = False
    name: Optional[str] = None

    def width_of(self, fifo_id: int) -> int:
        return self.widths[fifo_id % len(self.widths)]

    def jitter(self, rng: np.random.Generator) -> int:
        lo, hi = self.compute_jitter
        return lo if hi <= lo + 1 else int(rng.integers(lo, hi))


def _build_write_then_read(spec: BenchSpec):
    n = spec.n if spec.n is not None else spec.tokens
    if n < 1:
        raise ValueError("write-then-read needs n >= 1")
    fifos = [FifoDecl(0, "x", spec.width_of(0)), FifoDecl(1, "y", spec.width_of(1))]
    producer = TaskTrace(0, "producer", tuple([Write(0)] * n + [Write(1)] * n))
    consumer = TaskTrace(1, "consumer",
                         tuple(ev for _ in range(n) for ev in (Read(0), Read(1))))
    return fifos, [producer, consumer]


def _build_chain(spec: BenchSpec):
    if spec.stages < 2:
        raise ValueError("chain needs stages >= 2")
    if spec.lanes < 1:
        raise ValueError("chain needs lanes >= 1")
    rng = np.random.default_rng(spec.seed & _SEED_MASK)
    fifos = []
    for hop in range(spec.stages - 1):
        for lane in range(spec.lanes):
            fid = hop * spec.lanes + lane
            fifos.append(FifoDecl(fid, f"link{hop}_{lane}", spec.width_of(fid),
                                  group=f"hop{hop}" if spec.grouping else None))
    # per token the sink costs lanes + jitter_max + 1 more than a read;
    # other stages cost at most 2*lanes + jitter_max - 1, so the sink is
    # strictly slowest and latency does not depend on depths
    sink_compute = spec.lanes + spec.compute_jitter[1] + 1
    tasks = []
    for t in range(spec.stages):
        events: list[Event] = []
        for _ in range(spec.tokens):
            if t > 0:
                events += [Read((t - 1) * spec.lanes + lane) for lane in range(spec.lanes)]
            if t == spec.stages - 1:
                events.append(Compute(sink_compute))
            else:
                jitter = spec.jitter(rng)
                if jitter:
                    events.append(Compute(jitter))
                events += [Write(t * spec.lanes + lane) for lane in range(spec.lanes)]
        tasks.append(TaskTrace(t, f"stage{t}", tuple(events)))
    return fifos, tasks


def _build_tree(spec: BenchSpec):
    if spec.stages < 1:
        raise ValueError("tree needs stages >= 1")
    if spec.fanout < 2:
        raise ValueError("tree needs fanout >= 2")
    f, depth = spec.fanout, spec.stages
    # node (level, i) -> id in breadth-first order; every non-root node
    # owns the fifo to its parent, with fifo id = node id - 1
    offsets = [0]
    for level in range(depth + 1):
        offsets.append(offsets[-1] + f ** level)

    def node_id(level: int, i: int) -> int:
        return offsets[level] + i

    # strictly slower at the root than the fanout+2 cost of inner nodes
    root_compute = spec.compute_jitter[1] + 2
    fifos = []
    tasks = []
    for level in range(depth + 1):
        for i in range(f ** level):
            me = node_id(level, i)
            if level > 0:
                fifos.append(FifoDecl(me - 1, f"e{level}_{i}", spec.width_of(me - 1),
                                      group=f"lvl{level}" if spec.grouping else None))
            events: list[Event] = []
            for _ in range(spec.tokens):
                if level < depth:
                    events += [Read(node_id(level + 1, i * f + c) - 1)
                               for c in range(f)]
                if level == 0:
                    events.append(Compute(root_compute))
                else:
                    events.append(Compute(1))
                    events.append(Write(me - 1))
            name = "root" if level == 0 else f"n{level}_{i}"
            tasks.append(TaskTrace(me, name, tuple(events)))
    return fifos, tasks


def _build_ring(spec: BenchSpec):
    if spec.stages < 3:
        raise ValueError("ring needs stages >= 3")
    k = spec.stages
    fifos = [FifoDecl(i, f"ring{i}", spec.width_of(i)) for i in range(k)]
    head = TaskTrace(0, "node0",
                     tuple([Write(0)] * spec.tokens + [Read(k - 1)] * spec.tokens))
    tasks = [head]
    for i in range(1, k):
        events = tuple(ev for _ in range(spec.tokens) for ev in (Read(i - 1), Write(i)))
        tasks.append(TaskTrace(i, f"node{i}", events))
    return fifos, tasks


def _build_dag(spec: BenchSpec):
    if spec.tasks < 2:
        raise ValueError("random-dag needs tasks >= 2")
    if spec.fifos < 1:
        raise ValueError("random-dag needs fifos >= 1")
    rng = np.random.default_rng(spec.seed & _SEED_MASK)
    fifos = []
    produced: list[list[tuple[int, int]]] = [[] for _ in range(spec.tasks)]
    consumed: list[list[tuple[int, int]]] = [[] for _ in range(spec.tasks)]
    for fid in range(spec.fifos):
        p = int(rng.integers(0, spec.tasks - 1))
        c = int(rng.integers(p + 1, spec.tasks))
        count = int(rng.integers(1, spec.tokens + 1))
        declared = None
        if rng.random() < 0.4:
            # at least the write count, so writes never block at the bound
            declared = max(2, count + int(rng.integers(0, 9)))
        fifos.append(FifoDecl(fid, f"f{fid}", spec.width_of(fid),
                              declared_depth=declared))
        produced[p].append((fid, count))
        consumed[c].append((fid, count))
    tasks = []
    for t in range(spec.tasks):
        ops: list[Event] = [Write(fid) for fid, count in produced[t] for _ in range(count)]
        ops += [Read(fid) for fid, count in consumed[t] for _ in range(count)]
        events: list[Event] = []
        for idx in rng.permutation(len(ops)):
            jitter = spec.jitter(rng)
            if jitter:
                events.append(Compute(jitter))
            events.append(ops[int(idx)])
        if not events:
            events.append(Compute(1))
        tasks.append(TaskTrace(t, f"t{t}", tuple(events)))
    return fifos, tasks


_BUILDERS: dict[str, Callable[[BenchSpec], tuple[list[FifoDecl], list[TaskTrace]]]] = {
    "write-then-read": _build_write_then_read,
    "chain": _build_chain,
    "tree": _build_tree,
    "ring": _build_ring,
    "random-dag": _build_dag,
}


def generate(spec: BenchSpec) -> TraceProgram:
    """Build the program described by ``spec``."""
    try:
        builder = _BUILDERS[spec.pattern]
    except KeyError:
        known = ", ".join(sorted(_BUILDERS))
        raise ValueError(f"unknown pattern {spec.pattern!r} (known: {known})") from None
    if spec.tokens < 1:
        raise ValueError("tokens must be >= 1")
    if not spec.widths or any(w < 1 for w in spec.widths):
        raise ValueError("widths must be a non-empty list of positive ints")
    lo, hi = spec.compute_jitter
    if lo < 0 or hi < lo:
        raise ValueError("compute_jitter must satisfy 0 <= min <= max")
    fifos, tasks = builder(spec)
    return build_program(spec.name or spec.pattern.replace("-", "_"), fifos, tasks)


# the standard benchmark suite, smallest to largest
SUITE: tuple[tuple[str, BenchSpec], ...] = (
    ("wtr_n2", BenchSpec("write-then-read", n=2, widths=(32,))),
    ("wtr_n4", BenchSpec("write-then-read", n=4, widths=(32,))),
    ("wtr_n8", BenchSpec("write-then-read", n=8, widths=(32,))),
    ("wtr_n16", BenchSpec("write-then-read", n=16, widths=(32,))),
    ("wtr_wide_n8", BenchSpec("write-then-read", n=8, widths=(512,))),
    ("chain_short", BenchSpec("chain", stages=3, tokens=4, widths=(32,), seed=3)),
    ("chain_long", BenchSpec("chain", stages=6, lanes=3, tokens=64, widths=(512,),
                             grouping=True, seed=16)),
    ("tree_small", BenchSpec("tree", fanout=2, stages=2, tokens=16, widths=(512,),
                             grouping=True, seed=2)),
    ("tree_wide", BenchSpec("tree", fanout=3, stages=3, tokens=64, widths=(512,),
                            grouping=True, seed=5)),
    ("ring_3", BenchSpec("ring", stages=3, tokens=32, widths=(32,))),
    ("ring_5", BenchSpec("ring", stages=5, tokens=32, widths=(64,))),
    ("dag_small", BenchSpec("random-dag", tasks=6, fifos=8, tokens=8,
                            widths=(8, 16, 32, 64, 512), seed=11)),
    ("dag_medium", BenchSpec("random-dag", tasks=12, fifos=24, tokens=16,
                             widths=(8, 16, 32, 64, 512), seed=23)),
    ("throughput_100f", BenchSpec("chain", stages=6, lanes=20, tokens=500,
                                  widths=(32,), grouping=True, seed=9)),
)


def generate_suite(out_dir: str | Path) -> list[Path]:
    """Write every suite benchmark as a trace file under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, spec in SUITE:
        program = generate(replace(spec, name=name))
        path = out / f"{name}.trace"
        path.write_text(serialize_trace(program))
        paths.append(path)
    return paths
