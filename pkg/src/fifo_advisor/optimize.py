"""Depth-assignment search: baselines, Pareto bookkeeping, and five
search strategies over the pruned per-FIFO candidate depths.

Every optimizer evaluates the Baseline-Max configuration (all FIFOs at
their upper bound) first, treats ``max_evaluations`` as a hard cap on
simulate calls, counts deadlocked evaluations against the budget without
ever using them, and returns the non-dominated feasible subset of its
evaluation log together with the full log.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .bram import breakpoints, config_bram_count, program_breakpoints
from .sim import Evaluator, SimResult, TimingMode
from .trace import (MIN_DEPTH, FifoConfig, TraceProgram, fifo_groups,
                    upper_bounds)

log = logging.getLogger("fifo_advisor")


@dataclass(frozen=True, slots=True)
class EvaluatedPoint:
    """One simulated configuration.  ``latency`` is ``math.inf`` when the
    run deadlocked (``feasible`` False)."""

    config: FifoConfig
    latency: float
    bram: int
    feasible: bool


@dataclass(frozen=True, slots=True)
class ParetoFrontier:
    """Non-dominated feasible points, sorted by latency ascending (and
    therefore BRAM strictly descending)."""

    points: tuple[EvaluatedPoint, ...]


class SearchResult(NamedTuple):
    frontier: ParetoFrontier
    evaluations: tuple[EvaluatedPoint, ...]


@dataclass(frozen=True)
class SearchBudget:
    """Shared search knobs.

    ``beta_count`` is the number of annealing chains; their objective
    weights are linearly spaced over [0, 1].  ``epsilon`` is the greedy
    latency-degradation tolerance.  Annealing uses geometric cooling.
    """

    max_evaluations: int = 1000
    seed: int = 0
    beta_count: int = 8
    epsilon: float = 0.05
    sa_initial_temp: float = 1.0
    sa_cooling: float = 0.95
    sa_steps_per_temp: int = 10


def baseline_max(program: TraceProgram) -> FifoConfig:
    """Every FIFO at its upper bound; never introduces a deadlock.

    With depth equal to the total write count a write can never block, so
    only reads can wait, and on a trace captured from a real execution all
    reads are eventually served.
    """
    return FifoConfig(upper_bounds(program))


def baseline_min(program: TraceProgram) -> FifoConfig:
    """Every FIFO at the minimum legal depth."""
    return FifoConfig(tuple(MIN_DEPTH for _ in program.fifos))


def pareto_filter(points: list[EvaluatedPoint] | tuple[EvaluatedPoint, ...]) -> ParetoFrontier:
    """Non-dominated feasible subset; exact ties keep the first point seen."""
    feas = [p for p in points if p.feasible]
    order = sorted(range(len(feas)), key=lambda i: (feas[i].latency, feas[i].bram, i))
    kept: list[EvaluatedPoint] = []
    best_bram: Optional[int] = None
    for i in order:
        p = feas[i]
        if best_bram is None or p.bram < best_bram:
            kept.append(p)
            best_bram = p.bram
    return ParetoFrontier(tuple(kept))


def _ratio(value: float, base: float) -> float:
    """value/base with the zero-baseline convention: 0 when the point is
    also zero, +inf otherwise."""
    if base == 0:
        return 0.0 if value == 0 else math.inf
    return value / base


def score(point: EvaluatedPoint, baseline: EvaluatedPoint, alpha: float = 0.7) -> float:
    """Weighted sum of latency and BRAM ratios against a baseline point."""
    if not point.feasible:
        raise ValueError("cannot score an infeasible point")
    if not baseline.feasible:
        raise ValueError("baseline point is infeasible")
    return alpha * _ratio(point.latency, baseline.latency) + \
        (1.0 - alpha) * _ratio(point.bram, baseline.bram)


def highlight(frontier: ParetoFrontier, baseline: EvaluatedPoint,
              alpha: float = 0.7) -> Optional[EvaluatedPoint]:
    """Frontier point with the best score; ties prefer lower latency, then
    lower BRAM.  None for an empty frontier."""
    if not frontier.points:
        return None
    return min(frontier.points,
               key=lambda p: (score(p, baseline, alpha), p.latency, p.bram))


def hypervolume(frontier: ParetoFrontier, ref_latency: float, ref_bram: float) -> float:
    """Area dominated by the frontier, bounded by a reference point that is
    worse than every frontier point in both objectives."""
    pts = [p for p in frontier.points if p.latency < ref_latency and p.bram < ref_bram]
    area = 0.0
    for i, p in enumerate(pts):
        nxt = pts[i + 1].latency if i + 1 < len(pts) else ref_latency
        area += (min(nxt, ref_latency) - p.latency) * (ref_bram - p.bram)
    return area


# ---------------------------------------------------------------------------
# shared evaluation bookkeeping

class _EvalLog:
    """Evaluator wrapper enforcing the budget cap and keeping the log."""

    def __init__(self, program: TraceProgram, mode: TimingMode,
                 max_evaluations: int, jobs: Optional[int] = None):
        if max_evaluations < 1:
            raise ValueError(f"max_evaluations must be >= 1, got {max_evaluations}")
        self.program = program
        self.evaluator = Evaluator(program, mode)
        self.max_evaluations = max_evaluations
        self.jobs = jobs
        self.points: list[EvaluatedPoint] = []

    @property
    def remaining(self) -> int:
        return self.max_evaluations - len(self.points)

    def _record(self, config: FifoConfig, result: SimResult) -> EvaluatedPoint:
        point = EvaluatedPoint(
            config=config,
            latency=result.latency if not result.deadlocked else math.inf,
            bram=config_bram_count(self.program, config),
            feasible=not result.deadlocked,
        )
        self.points.append(point)
        return point

    def evaluate(self, config: FifoConfig) -> Optional[tuple[EvaluatedPoint, SimResult]]:
        """One budgeted simulate call, or None when the budget is spent."""
        if self.remaining <= 0:
            return None
        result = self.evaluator.evaluate(config)
        return self._record(config, result), result

    def evaluate_batch(self, configs: list[FifoConfig]) -> None:
        take = configs[:max(self.remaining, 0)]
        if not take:
            return
        for config, result in zip(take, self.evaluator.evaluate_many(take, jobs=self.jobs)):
            self._record(config, result)

    def finish(self) -> SearchResult:
        return SearchResult(pareto_filter(self.points), tuple(self.points))


# search dimensions: list of (member fifo ids, candidate depths ascending)
_Dims = list[tuple[list[int], list[int]]]


def _per_fifo_dims(program: TraceProgram) -> _Dims:
    return [([f.id], cands) for f, cands in zip(program.fifos, program_breakpoints(program))]


def _group_dims(program: TraceProgram) -> _Dims:
    """One search dimension per group cell.

    Cell candidates come from the shared width and the smallest member
    upper bound, so a cell assignment never exceeds any member's bound.
    Cells with mixed widths fall back to per-FIFO dimensions (with a
    warning): one shared depth has no common cost meaning there.
    """
    bounds = upper_bounds(program)
    per_fifo = program_breakpoints(program)
    dims: _Dims = []
    for cell in fifo_groups(program):
        if len(cell) == 1:
            f = cell[0]
            dims.append(([f], per_fifo[f]))
            continue
        widths = {program.fifos[f].bitwidth for f in cell}
        if len(widths) > 1:
            tag = program.fifos[cell[0]].group
            log.warning("group %r mixes FIFO widths %s; sampling its members independently",
                        tag, sorted(widths))
            for f in cell:
                dims.append(([f], per_fifo[f]))
        else:
            dims.append((list(cell), breakpoints(widths.pop(), min(bounds[f] for f in cell))))
    return dims


def _dims_config(program: TraceProgram, dims: _Dims, indices) -> FifoConfig:
    depths = [0] * len(program.fifos)
    for (members, cands), idx in zip(dims, indices):
        d = cands[idx]
        for f in members:
            depths[f] = d
    return FifoConfig(tuple(depths))


def _seed_key(seed: int, *extra: int) -> list[int]:
    return [seed & 0xFFFFFFFFFFFFFFFF, *extra]


# ---------------------------------------------------------------------------
# random sampling

def _random_over_dims(program: TraceProgram, budget: SearchBudget, mode: TimingMode,
                      dims: _Dims, jobs: Optional[int]) -> SearchResult:
    evlog = _EvalLog(program, mode, budget.max_evaluations, jobs)
    evlog.evaluate(baseline_max(program))
    lens = np.array([len(cands) for _, cands in dims], dtype=np.int64)
    if evlog.remaining > 0 and np.any(lens > 1):
        rng = np.random.default_rng(_seed_key(budget.seed))
        idx = rng.integers(0, lens, size=(evlog.remaining, len(dims)))
        configs = [_dims_config(program, dims, row) for row in idx]
        evlog.evaluate_batch(configs)
    return evlog.finish()


def random_search(program: TraceProgram, budget: SearchBudget,
                  mode: TimingMode = TimingMode.UNIFORM,
                  jobs: Optional[int] = None) -> SearchResult:
    """Uniform independent sampling of each FIFO's candidate depths.

    When every candidate set is a singleton the whole space is one
    configuration and only the baseline evaluation is performed.
    """
    return _random_over_dims(program, budget, mode, _per_fifo_dims(program), jobs)


def grouped_random_search(program: TraceProgram, budget: SearchBudget,
                          mode: TimingMode = TimingMode.UNIFORM,
                          jobs: Optional[int] = None) -> SearchResult:
    """Random sampling with one shared depth draw per FIFO group."""
    return _random_over_dims(program, budget, mode, _group_dims(program), jobs)


# ---------------------------------------------------------------------------
# simulated annealing

def _objective(point: EvaluatedPoint, beta: float, base: EvaluatedPoint,
               raw: bool) -> float:
    if not point.feasible:
        return math.inf
    if raw:
        return (1.0 - beta) * point.latency + beta * point.bram
    if not base.feasible:
        return math.inf
    return (1.0 - beta) * _ratio(point.latency, base.latency) + \
        beta * _ratio(point.bram, base.bram)


def _anneal_over_dims(program: TraceProgram, budget: SearchBudget, mode: TimingMode,
                      dims: _Dims, jobs: Optional[int],
                      raw_scalarization: bool) -> SearchResult:
    evlog = _EvalLog(program, mode, budget.max_evaluations, jobs)
    base_cfg = baseline_max(program)
    first = evlog.evaluate(base_cfg)
    if first is None:
        return evlog.finish()
    base_pt = first[0]

    n_chains = budget.beta_count
    if n_chains < 1:
        raise ValueError(f"beta_count must be >= 1, got {n_chains}")
    betas = [0.0] if n_chains == 1 else [k / (n_chains - 1) for k in range(n_chains)]
    per_chain = budget.max_evaluations // n_chains

    top_state = tuple(len(cands) - 1 for _, cands in dims)
    top_cfg = _dims_config(program, dims, top_state)

    for chain_idx, beta in enumerate(betas):
        rng = np.random.default_rng(_seed_key(budget.seed, chain_idx))
        state = top_state
        chain_calls = 0
        if top_cfg == base_cfg:
            cur_obj = _objective(base_pt, beta, base_pt, raw_scalarization)
        else:
            # group upper bounds shrank below some member's own bound, so
            # the chain's anchor is a distinct configuration
            out = evlog.evaluate(top_cfg)
            if out is None:
                break
            cur_obj = _objective(out[0], beta, base_pt, raw_scalarization)
            chain_calls += 1

        temp = budget.sa_initial_temp
        steps_done = 0
        while chain_calls < per_chain:
            dim = int(rng.integers(len(dims)))
            direction = 1 if rng.integers(2) else -1
            idx = min(max(state[dim] + direction, 0), len(dims[dim][1]) - 1)
            proposal = state[:dim] + (idx,) + state[dim + 1:]
            out = evlog.evaluate(_dims_config(program, dims, proposal))
            if out is None:
                return evlog.finish()
            chain_calls += 1
            obj = _objective(out[0], beta, base_pt, raw_scalarization)
            if math.isinf(obj):
                accept = False  # deadlocked moves are spent but never taken
            elif obj <= cur_obj:
                accept = True
            else:
                accept = rng.random() < math.exp((cur_obj - obj) / temp)
            if accept:
                state = proposal
                cur_obj = obj
            steps_done += 1
            if steps_done % budget.sa_steps_per_temp == 0:
                temp *= budget.sa_cooling
    return evlog.finish()


def simulated_annealing(program: TraceProgram, budget: SearchBudget,
                        mode: TimingMode = TimingMode.UNIFORM,
                        jobs: Optional[int] = None,
                        raw_scalarization: bool = False) -> SearchResult:
    """Multi-chain annealing: ``beta_count`` chains, one per scalarization
    weight over [0, 1], each mutating one FIFO's candidate index by +-1,
    pooled into a single frontier.

    Objectives are normalized by the Baseline-Max evaluation unless
    ``raw_scalarization`` asks for the unscaled weighted sum.
    """
    return _anneal_over_dims(program, budget, mode, _per_fifo_dims(program),
                             jobs, raw_scalarization)


def grouped_simulated_annealing(program: TraceProgram, budget: SearchBudget,
                                mode: TimingMode = TimingMode.UNIFORM,
                                jobs: Optional[int] = None,
                                raw_scalarization: bool = False) -> SearchResult:
    """Annealing over one candidate index per FIFO group."""
    return _anneal_over_dims(program, budget, mode, _group_dims(program),
                             jobs, raw_scalarization)


# ---------------------------------------------------------------------------
# greedy shrink

def greedy_search(program: TraceProgram, budget: SearchBudget,
                  mode: TimingMode = TimingMode.UNIFORM,
                  epsilon: Optional[float] = None,
                  jobs: Optional[int] = None) -> SearchResult:
    """Deterministic one-pass shrink.

    FIFOs are visited by descending peak occupancy in the Baseline-Max run
    (ties by id).  Each is dropped to its minimum candidate depth and kept
    there unless that deadlocks or degrades latency beyond (1 + epsilon)
    of baseline.  FIFOs already at their minimum candidate are skipped.
    """
    if epsilon is None:
        epsilon = budget.epsilon
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    evlog = _EvalLog(program, mode, budget.max_evaluations, jobs)
    first = evlog.evaluate(baseline_max(program))
    if first is None:
        return evlog.finish()
    base_pt, base_res = first
    if not base_pt.feasible:
        return evlog.finish()

    candidates = program_breakpoints(program)
    order = sorted(range(len(program.fifos)),
                   key=lambda f: (-base_res.peak_occupancy[f], f))
    bound = (1.0 + epsilon) * base_pt.latency
    depths = list(base_pt.config.depths)
    for f in order:
        smallest = candidates[f][0]
        if smallest == depths[f]:
            continue
        trial = depths.copy()
        trial[f] = smallest
        out = evlog.evaluate(FifoConfig(tuple(trial)))
        if out is None:
            break
        point = out[0]
        if point.feasible and point.latency <= bound:
            depths = trial
    return evlog.finish()


OPTIMIZERS: dict[str, Callable[..., SearchResult]] = {
    "random": random_search,
    "grouped-random": grouped_random_search,
    "sa": simulated_annealing,
    "grouped-sa": grouped_simulated_annealing,
    "greedy": greedy_search,
}
