"""The A*-GCS lower-bounding loop, its baseline, and feasible-solution helpers."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import conic
from .core import GcsError, GcsGraph, HeuristicTable, InputError, SolverFailure, neighborhood
from .heuristics import EPS_Y, classic_astar, h1_table
from .relaxation import FeasibleSolution, RelaxedSolution, solve_fixed_path, solve_relaxation

BREAK_TOL = 1e-9
TRACE_COLUMNS = ["iter", "phase", "S_size", "Sprime_size", "R_star_frontier", "R_star_dest", "C_lb", "C_f", "millis"]


class InternalConsistencyError(GcsError):
    """A finite relaxation produced no growth; usually eps_y is too loose for the solver accuracy."""


class UndefinedGapError(GcsError, ValueError):
    pass


@dataclass
class IterationRecord:
    iteration: int
    phase: int
    S_size: int
    Sprime_size: int
    R_frontier: float | None
    R_dest: float | None
    C_lb: float
    C_f: float | None
    elapsed: float  # seconds since the run started
    solve_seconds: float  # cumulative time spent building and solving relaxations


@dataclass
class RunResult:
    C_lb: float
    best_feasible: FeasibleSolution | None
    trace: list[IterationRecord]
    termination: str
    S_final: frozenset
    seconds: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def C_f(self) -> float | None:
        return None if self.best_feasible is None else self.best_feasible.cost

    def gap(self, C_f: float | None = None) -> float:
        C_f = self.C_f if C_f is None else C_f
        if C_f is None:
            raise UndefinedGapError("no feasible solution")
        return optimality_gap(C_f, self.C_lb)

    def to_json(self) -> dict:
        try:
            gap = self.gap()
        except UndefinedGapError:
            gap = None
        return {
            "C_lb": self.C_lb,
            "C_f": self.C_f,
            "gap_pct": gap,
            "termination": self.termination,
            "iterations": self.iterations,
            "S_final": sorted(self.S_final),
            "seconds": self.seconds,
            "best_feasible": None if self.best_feasible is None else self.best_feasible.to_json(),
            "trace": [asdict(r) for r in self.trace],
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.trace:
            w.writerow([
                r.iteration, r.phase, r.S_size, r.Sprime_size, _fmt(r.R_frontier), _fmt(r.R_dest),
                _fmt(r.C_lb), _fmt(r.C_f), f"{1000 * r.elapsed:.3f}",
            ])
        return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    return "inf" if math.isinf(x) else repr(float(x))


@dataclass
class SearchOptions:
    eps_y: float = EPS_Y
    max_iters: int | None = None
    rounding: str = "both"  # none | greedy | sampled | both
    samples: int = 16
    seed: int = 0
    accuracy: float = conic.DEFAULT_ACCURACY
    two_step: bool = True
    backend: object = None
    stop: Callable[[], bool] | None = field(default=None, repr=False)


def update_subset(S, Sprime, sol: RelaxedSolution, eps_y: float = EPS_Y) -> set[int]:
    """Add every terminal that receives more than ``eps_y`` flow from ``S``."""
    S = set(S)
    Sp = set(Sprime)
    grow = {v for (u, v), y in zip(sol.edges, sol.y) if u in S and v in Sp and y > eps_y}
    if not grow and math.isfinite(sol.objective):
        raise InternalConsistencyError(f"no terminal carries flow above {eps_y}")
    return S | grow


def update_feasible(current: FeasibleSolution | None, candidate: FeasibleSolution | None):
    if candidate is None:
        return current
    if current is None or candidate.cost < current.cost:
        return candidate
    return current


def extract_feasible(
    graph: GcsGraph,
    sol: RelaxedSolution,
    mode: str = "both",
    samples: int = 16,
    seed: int = 0,
    cache: dict | None = None,
    accuracy: float = conic.DEFAULT_ACCURACY,
    backend=None,
) -> FeasibleSolution | None:
    """Round relaxed flows into paths and re-optimize their points.

    ``greedy`` follows the heaviest unvisited out-edge; ``sampled`` draws
    walks with probability proportional to flow. Either way a walk that
    dead-ends before the destination is discarded.
    """
    if mode == "none" or not sol.optimal:
        return None
    if mode not in ("greedy", "sampled", "both"):
        raise InputError(f"unknown rounding mode {mode!r}")
    s, d = graph.origin, graph.destination
    out: dict[int, list[tuple[int, float]]] = {}
    for (u, v), y in zip(sol.edges, sol.y):
        out.setdefault(u, []).append((v, max(float(y), 0.0)))

    paths = []
    if mode in ("greedy", "both"):
        v, walk, seen = s, [s], {s}
        while v != d:
            cand = [(w, y) for w, y in out.get(v, []) if w not in seen and y > 0]
            if not cand:
                walk = None
                break
            v = min(cand, key=lambda c: (-c[1], c[0]))[0]
            walk.append(v)
            seen.add(v)
        if walk:
            paths.append(tuple(walk))
    if mode in ("sampled", "both"):
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            v, walk, seen = s, [s], {s}
            while v != d:
                cand = [(w, y) for w, y in out.get(v, []) if w not in seen and y > 0]
                if not cand:
                    walk = None
                    break
                p = np.array([y for _, y in cand])
                v = cand[int(rng.choice(len(cand), p=p / p.sum()))][0]
                walk.append(v)
                seen.add(v)
            if walk:
                paths.append(tuple(walk))

    cache = {} if cache is None else cache
    best = None
    for path in paths:
        if path not in cache:
            cache[path] = solve_fixed_path(graph, path, accuracy, backend)
        best = update_feasible(best, cache[path])
    return best


def two_step_feasible(graph: GcsGraph, h, accuracy: float = conic.DEFAULT_ACCURACY, backend=None) -> FeasibleSolution:
    """A* on set centroids, then re-optimize the points along the path it found.

    The centroid solution itself is kept if the solver's answer is not
    cheaper, so the result never costs more than the centroid path.
    """
    pts = graph.centroids()
    path, cost, _ = classic_astar(graph, pts, h)
    sol = solve_fixed_path(graph, path, accuracy, backend)
    if sol.cost <= cost:
        return sol
    steps = pts[list(path)]
    return FeasibleSolution(tuple(path), steps, float(np.linalg.norm(np.diff(steps, axis=0), axis=1).sum()))


def _validate_cut(graph: GcsGraph, S: Iterable[int]) -> set[int]:
    S = {int(v) for v in S}
    if any(not 0 <= v < graph.n_vertices for v in S):
        raise InputError("S_init contains unknown vertex ids")
    if graph.origin not in S or graph.destination in S:
        raise InputError("S_init must contain the origin and exclude the destination")
    return S


def run_astar_gcs(
    graph: GcsGraph,
    h: HeuristicTable,
    S_init: Iterable[int] | None = None,
    opts: SearchOptions | None = None,
) -> RunResult:
    """Grow a cut-set from ``S_init`` until growth stops paying off.

    Phase 1 runs while the destination is not adjacent to ``S`` and only
    raises the lower bound. Phase 2 compares the relaxation ending at the
    destination with the one ending anywhere else on the frontier, and stops
    once the frontier can no longer beat the destination.
    """
    opts = opts or SearchOptions()
    h.check(graph)
    S = _validate_cut(graph, [graph.origin] if S_init is None else S_init)
    d = graph.destination
    tic = time.perf_counter()
    solve_time = 0.0
    C_lb = 0.0
    best: FeasibleSolution | None = None
    trace: list[IterationRecord] = []
    cache: dict = {}
    limit = graph.n_vertices - 1

    def relax(Sp):
        nonlocal solve_time
        t0 = time.perf_counter()
        sol = solve_relaxation(graph, S, Sp, h, None, opts.accuracy, opts.backend)
        solve_time += time.perf_counter() - t0
        return sol

    def record(phase, n_sp, r_f, r_d):
        trace.append(IterationRecord(
            len(trace) + 1, phase, len(S), n_sp, r_f, r_d, C_lb,
            None if best is None else best.cost, time.perf_counter() - tic, solve_time,
        ))

    def result(reason):
        return RunResult(C_lb, best, trace, reason, frozenset(S), time.perf_counter() - tic)

    def halted():
        if opts.max_iters is not None and len(trace) >= opts.max_iters:
            return "preempted"
        if opts.stop is not None and opts.stop():
            return "preempted"
        if len(trace) > limit:
            return "iteration-cap"
        return None

    def feasible_from(sol):
        return extract_feasible(graph, sol, opts.rounding, opts.samples, opts.seed + len(trace), cache,
                                opts.accuracy, opts.backend)

    try:
        # Phase 1
        while d not in (N := neighborhood(graph, S)):
            sol = relax(N)
            if not math.isfinite(sol.objective):
                return result("frontier-exhausted")
            C_lb = max(C_lb, sol.objective)
            record(1, len(N), sol.objective, None)
            S = update_subset(S, N, sol, opts.eps_y)
            if reason := halted():
                return result(reason)

        # Phase 2
        if opts.two_step:
            best = update_feasible(best, two_step_feasible(graph, h, opts.accuracy, opts.backend))
        sol_d = relax([d])
        best = update_feasible(best, feasible_from(sol_d))
        while True:
            N = neighborhood(graph, S)
            if N == [d]:
                C_lb = max(C_lb, sol_d.objective)
                record(2, 0, None, sol_d.objective)
                return result("frontier-exhausted")
            Sp = [v for v in N if v != d]
            sol = relax(Sp)
            C_lb = max(C_lb, min(sol.objective, sol_d.objective))
            record(2, len(Sp), sol.objective, sol_d.objective)
            if sol.objective >= sol_d.objective - BREAK_TOL:
                return result("bound-test")
            S = update_subset(S, Sp, sol, opts.eps_y)
            sol_d = relax([d])
            best = update_feasible(best, feasible_from(sol_d))
            if reason := halted():
                return result(reason)
    except SolverFailure as exc:
        raise SolverFailure(str(exc), partial=result("numerical-failure")) from exc


def run_baseline(
    graph: GcsGraph, h: HeuristicTable | None = None, opts: SearchOptions | None = None
) -> RunResult:
    """One relaxation over the whole graph (cut-set ``V \\ {d}``) with zero heuristic.

    ``h`` only steers the two-step feasible solution; it defaults to the
    set-distance heuristic.
    """
    opts = opts or SearchOptions()
    tic = time.perf_counter()
    d = graph.destination
    S = frozenset(range(graph.n_vertices)) - {d}
    zero = np.zeros(graph.n_vertices)
    t0 = time.perf_counter()
    sol = solve_relaxation(graph, S, [d], zero, None, opts.accuracy, opts.backend)
    solve_time = time.perf_counter() - t0
    best = extract_feasible(graph, sol, opts.rounding, opts.samples, opts.seed, None, opts.accuracy, opts.backend)
    if opts.two_step:
        h = h1_table(graph) if h is None else h
        best = update_feasible(best, two_step_feasible(graph, h, opts.accuracy, opts.backend))
    C_lb = sol.objective
    rec = IterationRecord(1, 2, len(S), 1, None, C_lb, C_lb, None if best is None else best.cost,
                          time.perf_counter() - tic, solve_time)
    return RunResult(C_lb, best, [rec], "frontier-exhausted", S, time.perf_counter() - tic)


def optimality_gap(C_f: float, C_lb: float, tol: float = 1e-6) -> float:
    """Percent gap ``100 (C_f - C_lb) / C_lb`` between a feasible cost and a lower bound."""
    if not C_lb > 0:
        raise UndefinedGapError(f"gap undefined for lower bound {C_lb}")
    if abs(C_f - C_lb) <= 1e-9:
        return 0.0
    if C_f < C_lb - tol * max(1.0, C_lb):
        raise InputError(f"feasible cost {C_f} is below the lower bound {C_lb}")
    return 100.0 * (C_f - C_lb) / C_lb
