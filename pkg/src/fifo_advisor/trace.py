"""Dataflow trace data model, text format parser, and validation.

A trace captures one concrete execution of a dataflow design as a set of
bounded FIFO channels plus one event sequence per task.  Events are either
``c <cycles>`` (local compute), ``r <fifo_id>`` (blocking read) or
``w <fifo_id>`` (blocking write).  The text format is line oriented:

    trace-format 1
    program <name>
    fifo <id> <name> width=<bits> [depth=<upper>] [group=<tag>]
    task <id> <name>
      c <cycles>
      r <fifo_id>
      w <fifo_id>
    end

``#`` starts a comment; blank lines are ignored.  Parsed programs are
immutable and safe to share between threads.
"""

from __future__ import annotations

import json
import re
import weakref
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

TRACE_FORMAT_VERSION = 1

# Depths below this are outside the optimization space: a depth-1 FIFO stalls
# the producer after every write, and hardware FIFOs are generated with at
# least two entries.
MIN_DEPTH = 2


class TraceError(ValueError):
    """Base class for trace parsing and validation failures."""


class TraceSyntaxError(TraceError):
    """Malformed trace text.  Carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceSemanticError(TraceError):
    """Structurally well-formed trace that violates a consistency rule."""


@dataclass(frozen=True, slots=True)
class Compute:
    cycles: int


@dataclass(frozen=True, slots=True)
class Read:
    fifo: int


@dataclass(frozen=True, slots=True)
class Write:
    fifo: int


Event = Union[Compute, Read, Write]


@dataclass(frozen=True, slots=True)
class FifoDecl:
    """One FIFO channel declaration.

    ``producer_task`` / ``consumer_task`` are derived from usage during
    validation; they are ``None`` for FIFOs with no writes / no reads.
    ``declared_depth`` is an optional user-specified depth bound from the
    design source.
    """

    id: int
    name: str
    bitwidth: int
    declared_depth: Optional[int] = None
    group: Optional[str] = None
    producer_task: Optional[int] = None
    consumer_task: Optional[int] = None


@dataclass(frozen=True, slots=True)
class TaskTrace:
    task_id: int
    name: str
    events: tuple[Event, ...]


@dataclass(frozen=True)
class TraceProgram:
    """A complete validated trace.  FIFO and task ids are dense, so
    ``program.fifos[i].id == i`` and ``program.tasks[i].task_id == i``."""

    name: str
    fifos: tuple[FifoDecl, ...]
    tasks: tuple[TaskTrace, ...]

    def fifo_index(self) -> dict[str, int]:
        return {f.name: f.id for f in self.fifos}


@dataclass(frozen=True, slots=True)
class FifoConfig:
    """Per-FIFO depth assignment, indexed by FIFO id."""

    depths: tuple[int, ...]

    @staticmethod
    def from_mapping(program: TraceProgram, depths: Mapping[str, int]) -> "FifoConfig":
        """Build a config from a {fifo name: depth} mapping.

        Every FIFO of ``program`` must be assigned.  Depths must be integers
        within [MIN_DEPTH, upper_bound].
        """
        by_name = program.fifo_index()
        unknown = sorted(set(depths) - set(by_name))
        if unknown:
            raise TraceSemanticError(f"config names unknown FIFOs: {', '.join(unknown)}")
        missing = sorted(set(by_name) - set(depths))
        if missing:
            raise TraceSemanticError(f"config missing FIFOs: {', '.join(missing)}")
        out = [0] * len(program.fifos)
        bounds = upper_bounds(program)
        for name, depth in depths.items():
            if not isinstance(depth, int) or isinstance(depth, bool):
                raise TraceSemanticError(f"depth for FIFO '{name}' is not an integer: {depth!r}")
            fid = by_name[name]
            if depth < MIN_DEPTH:
                raise TraceSemanticError(f"depth for FIFO '{name}' is {depth}, below minimum {MIN_DEPTH}")
            if depth > bounds[fid]:
                raise TraceSemanticError(
                    f"depth for FIFO '{name}' is {depth}, above upper bound {bounds[fid]}")
            out[fid] = depth
        return FifoConfig(tuple(out))

    def to_mapping(self, program: TraceProgram) -> dict[str, int]:
        return {f.name: self.depths[f.id] for f in program.fifos}


# ---------------------------------------------------------------------------
# derived per-program quantities (cached; programs are immutable)

_COUNTS_CACHE: "weakref.WeakKeyDictionary[TraceProgram, tuple[tuple[int, ...], tuple[int, ...]]]" = (
    weakref.WeakKeyDictionary()
)


def _traffic_counts(program: TraceProgram) -> tuple[tuple[int, ...], tuple[int, ...]]:
    cached = _COUNTS_CACHE.get(program)
    if cached is not None:
        return cached
    writes = [0] * len(program.fifos)
    reads = [0] * len(program.fifos)
    for task in program.tasks:
        for ev in task.events:
            if isinstance(ev, Write):
                writes[ev.fifo] += 1
            elif isinstance(ev, Read):
                reads[ev.fifo] += 1
    result = (tuple(writes), tuple(reads))
    _COUNTS_CACHE[program] = result
    return result


def write_counts(program: TraceProgram) -> tuple[int, ...]:
    """Total Write events per FIFO id."""
    return _traffic_counts(program)[0]


def read_counts(program: TraceProgram) -> tuple[int, ...]:
    """Total Read events per FIFO id."""
    return _traffic_counts(program)[1]


def upper_bound(program: TraceProgram, fifo_id: int) -> int:
    """Largest depth worth considering for one FIFO.

    The declared depth wins when present; otherwise the total write count
    (a FIFO never holds more tokens than were ever written).  Always >= 2.
    """
    return upper_bounds(program)[fifo_id]


def upper_bounds(program: TraceProgram) -> tuple[int, ...]:
    writes = write_counts(program)
    out = []
    for f in program.fifos:
        if f.declared_depth is not None:
            out.append(f.declared_depth)
        else:
            out.append(max(MIN_DEPTH, writes[f.id]))
    return tuple(out)


def fifo_groups(program: TraceProgram) -> list[list[int]]:
    """Partition FIFO ids into group cells.

    FIFOs sharing a ``group`` tag form one cell; untagged FIFOs are
    singletons.  Cells are ordered by their smallest member id.
    """
    tagged: dict[str, list[int]] = {}
    cells: list[list[int]] = []
    for f in program.fifos:
        if f.group is None:
            cells.append([f.id])
        elif f.group in tagged:
            tagged[f.group].append(f.id)
        else:
            cell = [f.id]
            tagged[f.group] = cell
            cells.append(cell)
    return cells


# ---------------------------------------------------------------------------
# validation

_NAME_RE = re.compile(r"^[^\s#]+$")


def _check_name(kind: str, name: str) -> None:
    if not _NAME_RE.match(name):
        raise TraceSemanticError(f"invalid {kind} name: {name!r}")


def build_program(name: str, fifos: Iterable[FifoDecl], tasks: Iterable[TaskTrace]) -> TraceProgram:
    """Assemble and validate a program from parts.

    Derives producer/consumer tasks from event usage, so the ``FifoDecl``
    inputs may leave those fields as None.  Raises TraceSemanticError on any
    consistency violation.
    """
    fifo_list = sorted(fifos, key=lambda f: f.id)
    task_list = sorted(tasks, key=lambda t: t.task_id)

    ids = [f.id for f in fifo_list]
    if ids != list(range(len(ids))):
        raise TraceSemanticError(f"FIFO ids must be dense and unique starting at 0, got {ids}")
    tids = [t.task_id for t in task_list]
    if tids != list(range(len(tids))):
        raise TraceSemanticError(f"task ids must be dense and unique starting at 0, got {tids}")

    seen_names: set[str] = set()
    for f in fifo_list:
        _check_name("FIFO", f.name)
        if f.name in seen_names:
            raise TraceSemanticError(f"duplicate FIFO name: {f.name!r}")
        seen_names.add(f.name)
        if f.bitwidth < 1:
            raise TraceSemanticError(f"FIFO '{f.name}': width must be >= 1, got {f.bitwidth}")
        if f.declared_depth is not None and f.declared_depth < MIN_DEPTH:
            raise TraceSemanticError(
                f"FIFO '{f.name}': declared depth must be >= {MIN_DEPTH}, got {f.declared_depth}")

    n_fifos = len(fifo_list)
    writers: list[Optional[int]] = [None] * n_fifos
    readers: list[Optional[int]] = [None] * n_fifos
    writes = [0] * n_fifos
    reads = [0] * n_fifos
    for t in task_list:
        _check_name("task", t.name)
        for ev in t.events:
            if isinstance(ev, Compute):
                if ev.cycles < 0:
                    raise TraceSemanticError(
                        f"task '{t.name}': compute cycles must be >= 0, got {ev.cycles}")
                continue
            fid = ev.fifo
            if not 0 <= fid < n_fifos:
                raise TraceSemanticError(f"task '{t.name}': unknown FIFO id {fid}")
            fname = fifo_list[fid].name
            if isinstance(ev, Write):
                if writers[fid] is not None and writers[fid] != t.task_id:
                    raise TraceSemanticError(
                        f"FIFO '{fname}': written by multiple tasks "
                        f"({task_list[writers[fid]].name} and {t.name})")
                writers[fid] = t.task_id
                writes[fid] += 1
            else:
                if readers[fid] is not None and readers[fid] != t.task_id:
                    raise TraceSemanticError(
                        f"FIFO '{fname}': read by multiple tasks "
                        f"({task_list[readers[fid]].name} and {t.name})")
                readers[fid] = t.task_id
                reads[fid] += 1

    problems = []
    for f in fifo_list:
        if writers[f.id] is not None and writers[f.id] == readers[f.id]:
            problems.append(f"FIFO '{f.name}': task '{task_list[writers[f.id]].name}' both writes and reads it (self-loop)")
        if reads[f.id] > writes[f.id]:
            problems.append(
                f"FIFO '{f.name}': {reads[f.id]} reads exceed {writes[f.id]} writes")
    if problems:
        raise TraceSemanticError("; ".join(problems))

    fixed = tuple(
        FifoDecl(f.id, f.name, f.bitwidth, f.declared_depth, f.group,
                 writers[f.id], readers[f.id])
        for f in fifo_list
    )
    return TraceProgram(name=name, fifos=fixed, tasks=tuple(task_list))


# ---------------------------------------------------------------------------
# text format

def _split_statement(raw: str) -> list[str]:
    hash_pos = raw.find("#")
    if hash_pos >= 0:
        raw = raw[:hash_pos]
    return raw.split()


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token, 10)
    except ValueError:
        raise TraceSyntaxError(lineno, f"{what} must be an integer, got {token!r}") from None


def parse_trace(data: Union[str, bytes]) -> TraceProgram:
    """Parse trace text into a validated TraceProgram.

    Raises TraceSyntaxError (with line number) for malformed text and
    TraceSemanticError for consistency violations.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    program_name: Optional[str] = None
    saw_version = False
    fifos: list[FifoDecl] = []
    tasks: list[TaskTrace] = []
    cur_task: Optional[tuple[int, str]] = None
    cur_events: list[Event] = []

    for lineno, raw in enumerate(data.splitlines(), start=1):
        parts = _split_statement(raw)
        if not parts:
            continue
        keyword = parts[0]

        if not saw_version:
            if keyword != "trace-format":
                raise TraceSyntaxError(lineno, "expected 'trace-format <version>' as first statement")
            if len(parts) != 2:
                raise TraceSyntaxError(lineno, "expected 'trace-format <version>'")
            version = _parse_int(parts[1], lineno, "trace-format version")
            if version != TRACE_FORMAT_VERSION:
                raise TraceSyntaxError(lineno, f"unsupported trace-format version {version}")
            saw_version = True
            continue

        if cur_task is not None:
            if keyword == "c":
                if len(parts) != 2:
                    raise TraceSyntaxError(lineno, "expected 'c <cycles>'")
                cur_events.append(Compute(_parse_int(parts[1], lineno, "compute cycles")))
            elif keyword in ("r", "w"):
                if len(parts) != 2:
                    raise TraceSyntaxError(lineno, f"expected '{keyword} <fifo_id>'")
                fid = _parse_int(parts[1], lineno, "fifo id")
                cur_events.append(Read(fid) if keyword == "r" else Write(fid))
            elif keyword == "end":
                if len(parts) != 1:
                    raise TraceSyntaxError(lineno, "unexpected tokens after 'end'")
                tasks.append(TaskTrace(cur_task[0], cur_task[1], tuple(cur_events)))
                cur_task = None
                cur_events = []
            else:
                raise TraceSyntaxError(lineno, f"unexpected statement {keyword!r} inside task body")
            continue

        if keyword == "program":
            if len(parts) != 2:
                raise TraceSyntaxError(lineno, "expected 'program <name>'")
            if program_name is not None:
                raise TraceSyntaxError(lineno, "duplicate 'program' statement")
            program_name = parts[1]
        elif keyword == "fifo":
            if len(parts) < 3:
                raise TraceSyntaxError(lineno, "expected 'fifo <id> <name> width=<bits> ...'")
            fid = _parse_int(parts[1], lineno, "fifo id")
            fname = parts[2]
            width: Optional[int] = None
            depth: Optional[int] = None
            group: Optional[str] = None
            for attr in parts[3:]:
                key, sep, value = attr.partition("=")
                if not sep:
                    raise TraceSyntaxError(lineno, f"expected key=value attribute, got {attr!r}")
                if key == "width":
                    width = _parse_int(value, lineno, "width")
                elif key == "depth":
                    depth = _parse_int(value, lineno, "depth")
                elif key == "group":
                    group = value
                else:
                    raise TraceSyntaxError(lineno, f"unknown fifo attribute {key!r}")
            if width is None:
                raise TraceSyntaxError(lineno, f"fifo '{fname}' is missing width=<bits>")
            fifos.append(FifoDecl(fid, fname, width, depth, group))
        elif keyword == "task":
            if len(parts) != 3:
                raise TraceSyntaxError(lineno, "expected 'task <id> <name>'")
            cur_task = (_parse_int(parts[1], lineno, "task id"), parts[2])
        elif keyword == "end":
            raise TraceSyntaxError(lineno, "'end' outside a task body")
        else:
            raise TraceSyntaxError(lineno, f"unknown statement {keyword!r}")

    if cur_task is not None:
        raise TraceSyntaxError(len(data.splitlines()) + 1, f"task '{cur_task[1]}' is missing 'end'")
    if not saw_version:
        raise TraceSyntaxError(1, "empty input: expected 'trace-format 1'")
    if program_name is None:
        raise TraceSyntaxError(1, "missing 'program <name>' statement")

    return build_program(program_name, fifos, tasks)


def serialize_trace(program: TraceProgram) -> str:
    """Render a program in canonical text form; parse_trace round-trips it."""
    lines = [f"trace-format {TRACE_FORMAT_VERSION}", f"program {program.name}"]
    for f in program.fifos:
        attrs = [f"width={f.bitwidth}"]
        if f.declared_depth is not None:
            attrs.append(f"depth={f.declared_depth}")
        if f.group is not None:
            attrs.append(f"group={f.group}")
        lines.append(f"fifo {f.id} {f.name} " + " ".join(attrs))
    for t in program.tasks:
        lines.append(f"task {t.task_id} {t.name}")
        for ev in t.events:
            if isinstance(ev, Compute):
                lines.append(f"  c {ev.cycles}")
            elif isinstance(ev, Read):
                lines.append(f"  r {ev.fifo}")
            else:
                lines.append(f"  w {ev.fifo}")
        lines.append("end")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config files

def parse_config_json(data: Union[str, bytes], program: TraceProgram) -> FifoConfig:
    """Load a depth assignment from JSON: {"depths": {"<fifo name>": <int>}}."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TraceSemanticError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("depths"), dict):
        raise TraceSemanticError('config must be an object of the form {"depths": {...}}')
    return FifoConfig.from_mapping(program, doc["depths"])


def config_to_json(config: FifoConfig, program: TraceProgram) -> str:
    return json.dumps({"depths": config.to_mapping(program)}, indent=2) + "\n"
