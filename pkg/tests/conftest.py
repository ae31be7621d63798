"""Shared fixtures: the generated benchmark corpus and a program fuzzer."""
from __future__ import annotations

import random

import pytest

from fifo_advisor.benchgen import generate_suite
from fifo_advisor.trace import (Compute, FifoConfig, FifoDecl, Read, TaskTrace,
                                TraceProgram, Write, build_program, parse_trace)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    generate_suite(out)
    return out


@pytest.fixture(scope="session")
def corpus(corpus_dir) -> dict[str, TraceProgram]:
    """Every benchmark in the suite, parsed back from its trace file."""
    return {path.stem: parse_trace(path.read_text())
            for path in sorted(corpus_dir.glob("*.trace"))}


def random_program(rng: random.Random) -> TraceProgram:
    """A small random but valid program; cycles between tasks are allowed.

    Read counts never exceed write counts, so the result always passes
    validation, but nothing guarantees deadlock freedom.
    """
    n_tasks = rng.randint(2, 5)
    n_fifos = rng.randint(1, 4)
    per_task: list[list] = [[] for _ in range(n_tasks)]
    fifos = []
    for fid in range(n_fifos):
        producer = rng.randrange(n_tasks)
        consumer = rng.choice([t for t in range(n_tasks) if t != producer])
        writes = rng.randint(1, 6)
        reads = rng.randint(0, writes)
        per_task[producer] += [Write(fid)] * writes
        per_task[consumer] += [Read(fid)] * reads
        fifos.append(FifoDecl(fid, f"f{fid}", rng.choice([1, 8, 32, 512])))
    tasks = []
    for tid in range(n_tasks):
        ops = per_task[tid]
        rng.shuffle(ops)
        events = []
        for op in ops:
            if rng.random() < 0.5:
                events.append(Compute(rng.randint(0, 3)))
            events.append(op)
        if not events:
            events.append(Compute(rng.randint(0, 2)))
        tasks.append(TaskTrace(tid, f"t{tid}", tuple(events)))
    return build_program("fuzz", fifos, tasks)


def random_config(rng: random.Random, program: TraceProgram,
                  lo: int = 1, hi: int = 7) -> FifoConfig:
    return FifoConfig(tuple(rng.randint(lo, hi) for _ in program.fifos))
