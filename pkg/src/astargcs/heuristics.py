"""Admissible cost-to-go estimates and classic A* on representative points."""
from __future__ import annotations

import heapq
import logging
import time

import numpy as np

from . import conic
from .core import (
    GcsGraph,
    HeuristicTable,
    InputError,
    NoPathError,
    SolverFailure,
    reverse,
    set_distance,
)
from .relaxation import solve_relaxation

log = logging.getLogger(__name__)

EPS_Y = 1e-6


def h1_table(graph: GcsGraph) -> HeuristicTable:
    """Distance from each set to the destination set, ignoring the graph."""
    tic = time.perf_counter()
    target = graph.sets[graph.destination]
    vals = np.array([set_distance(s, target) for s in graph.sets])
    vals[graph.destination] = 0.0
    return HeuristicTable(vals, {"method": "h1", "seconds": time.perf_counter() - tic})


def h2_expand_freeze(
    graph: GcsGraph,
    n_max: int = 100,
    eps_y: float = EPS_Y,
    accuracy: float = conic.DEFAULT_ACCURACY,
    backend=None,
) -> HeuristicTable:
    """Expand-and-freeze estimates from relaxations solved backwards from the destination.

    Each round solves the relaxation on the reversed graph with the active
    core as cut-set and its unfrozen neighbours as zero-cost terminals. Every
    terminal receiving flow is frozen at the round's optimal value, which
    lower-bounds the cost-to-go of every vertex outside the frozen region.

    Once the core holds ``n_max`` vertices it is collapsed: the frozen
    vertices that still border unfrozen ones become the new core, and later
    flows may start at any of them after paying its frozen value.
    """
    if n_max < 2:
        raise InputError("n_max must be at least 2")
    tic = time.perf_counter()
    rg = reverse(graph)
    d = graph.destination
    h2 = np.zeros(graph.n_vertices)
    frozen = {d}
    core = {d}
    sources = {d: 0.0}
    rounds = collapses = 0

    while True:
        frontier = sorted({v for u in core for v in rg.successors(u) if v not in frozen})
        if not frontier:
            break
        h_front = {v: 0.0 for v in frontier}
        sol = solve_relaxation(rg, core, frontier, h_front, sources, accuracy, backend)
        rounds += 1
        if not sol.optimal:
            raise SolverFailure(f"expand-and-freeze round {rounds} is infeasible")
        fresh = {v for (u, v), y in zip(sol.edges, sol.y) if v in h_front and y > eps_y}
        if not fresh:
            raise SolverFailure("expand-and-freeze made no progress; check eps_y against solver accuracy")
        value = max(sol.objective, 0.0)
        for v in fresh:
            h2[v] = value
        frozen |= fresh
        core |= fresh
        if len(core) >= n_max and len(core) > len(sources):
            border = {b for b in frozen if any(w not in frozen for w in rg.successors(b))}
            if not border:
                break
            sources = {b: float(h2[b]) for b in sorted(border)}
            core = set(border)
            collapses += 1
            log.debug("collapsed frozen region of %d vertices to %d sources", len(frozen), len(border))
    return HeuristicTable(
        h2,
        {
            "method": "h2",
            "n_max": n_max,
            "rounds": rounds,
            "collapses": collapses,
            "seconds": time.perf_counter() - tic,
        },
    )


def blend(h1: HeuristicTable, h2: HeuristicTable, w: float) -> HeuristicTable:
    if not 0.0 <= w <= 1.0:
        raise InputError(f"weight must lie in [0, 1], got {w}")
    if len(h1) != len(h2):
        raise InputError("heuristic tables cover different vertex sets")
    if w == 0.0:
        vals = h1.values.copy()
    elif w == 1.0:
        vals = h2.values.copy()
    else:
        vals = (1 - w) * h1.values + w * h2.values
    return HeuristicTable(vals, {"method": "blend", "w": w, "n_max": h2.meta.get("n_max")})


def classic_astar(graph: GcsGraph, points, h) -> tuple[list[int], float, list[int]]:
    """A* over fixed points with Euclidean edge weights.

    Returns ``(path, cost, closed)`` where ``closed`` lists expanded vertices
    in order, ending with the destination. Ties go to lower f, then lower g,
    then lower vertex id. Closed vertices are never reopened.
    """
    pts = np.asarray(points, dtype=float)
    s, d = graph.origin, graph.destination
    g = {s: 0.0}
    parent = {s: None}
    heap = [(float(h[s]), 0.0, s)]
    closed: list[int] = []
    done = set()
    while heap:
        f, gu, u = heapq.heappop(heap)
        if u in done or gu > g[u]:
            continue
        done.add(u)
        closed.append(u)
        if u == d:
            path = [d]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1], gu, closed
        for v in graph.successors(u):
            if v in done:
                continue
            gv = gu + float(np.linalg.norm(pts[u] - pts[v]))
            if v not in g or gv < g[v]:
                g[v] = gv
                parent[v] = u
                heapq.heappush(heap, (gv + float(h[v]), gv, v))
    raise NoPathError("destination unreachable from origin")


def sinit_from_astar(graph: GcsGraph, h) -> set[int]:
    """Closed set of A* on the set centroids, minus the destination."""
    _, _, closed = classic_astar(graph, graph.centroids(), h)
    return set(closed) - {graph.destination}


def reseat_origin(h: HeuristicTable, graph: GcsGraph) -> HeuristicTable:
    """Adapt a table built for another origin to ``graph``'s origin.

    Only the origin entry changes: it becomes the cheapest first hop plus the
    estimate at the hop, ``min_w dist(X_s, X_w) + h(w)``. That is admissible
    whenever ``h`` is admissible for the successors, and lets one table
    serve many origins.
    """
    s = graph.origin
    vals = h.values.copy()
    if len(vals) != graph.n_vertices:
        raise InputError("heuristic table does not match the graph")
    src = graph.sets[s]
    vals[s] = min(set_distance(src, graph.sets[w]) + float(h.values[w]) for w in graph.successors(s))
    return HeuristicTable(vals, {**h.meta, "reseated_origin": s})
