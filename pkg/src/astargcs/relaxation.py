"""Convex relaxation of the cut-set shortest-path program, and fixed-path programs.

Given a cut-set ``S`` and terminals ``S' ⊆ N_S`` the relaxation picks a
fractional flow from the origin through ``S`` into one terminal ``v`` and
pays the travelled Euclidean length plus ``h(v)``. Bilinear point/flow
products are replaced by perspective variables ``z = y*x_u``, ``z' = y*x_v``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import conic
from .core import (
    ConvexSet,
    CutState,
    GcsGraph,
    HeuristicTable,
    InputError,
    SolverFailure,
    emit_membership,
    perspective_membership,
    project,
)


@dataclass
class Layout:
    """Where each relaxation quantity lives in the program's variable vector."""

    edges: list[tuple[int, int]]
    y: np.ndarray
    t: np.ndarray
    z: np.ndarray  # (|E|, n)
    zp: np.ndarray
    terminals: list[int]
    alpha: np.ndarray
    sources: list[int]
    beta: np.ndarray | None = None  # only with several weighted sources

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass
class RelaxedSolution:
    objective: float
    status: str
    S: frozenset
    Sprime: tuple[int, ...]
    edges: list[tuple[int, int]] = field(default_factory=list)
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    zp: np.ndarray | None = None
    alpha: np.ndarray | None = None
    sources: tuple[int, ...] = ()
    seconds: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == conic.OPTIMAL

    def y_of(self, u: int, v: int) -> float:
        return float(self.y[self.edges.index((u, v))])

    def flows(self) -> dict[tuple[int, int], float]:
        return {e: float(v) for e, v in zip(self.edges, self.y)}

    def to_json(self) -> dict:
        out = {
            "objective": None if not np.isfinite(self.objective) else self.objective,
            "status": self.status,
            "S": sorted(self.S),
            "Sprime": list(self.Sprime),
        }
        if self.optimal:
            out["y"] = {f"{u}->{v}": float(val) for (u, v), val in zip(self.edges, self.y)}
            out["alpha"] = {str(v): float(a) for v, a in zip(self.Sprime, self.alpha)}
        return out


@dataclass
class FeasibleSolution:
    path: tuple[int, ...]
    points: np.ndarray
    cost: float

    def to_json(self) -> dict:
        return {"path": list(self.path), "points": self.points.tolist(), "cost": self.cost}

    def check(self, graph: GcsGraph, tol: float = 1e-6) -> None:
        """Raise ``AssertionError`` unless this is a valid solution of ``graph``."""
        edges = set(graph.edges)
        for u, v in zip(self.path, self.path[1:]):
            assert (u, v) in edges, f"({u}, {v}) is not an edge"
        for v, x in zip(self.path, self.points):
            assert perspective_membership(graph.sets[v], x, 1.0, tol), f"point of {v} outside its set"
        cost = float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())
        assert abs(cost - self.cost) <= 1e-9 * max(1.0, cost)


def build_relaxation(
    graph: GcsGraph,
    S,
    Sprime: Sequence[int],
    h: HeuristicTable | Mapping[int, float] | np.ndarray,
    sources: Mapping[int, float] | None = None,
) -> tuple[conic.ProgramBuilder, Layout]:
    """Assemble the relaxation without cut-set validation.

    ``sources`` maps source vertices to a start-cost offset. ``None`` means the
    graph origin with offset 0, which is the standard single-source program;
    several sources let the flow start at any of them, paying its offset.
    """
    S = frozenset(S)
    terminals = sorted(int(v) for v in Sprime)
    Vbar = S | set(terminals)
    n = graph.dimension
    hv = {}
    for v in terminals:
        try:
            hv[v] = float(h[v])
        except (KeyError, IndexError) as exc:
            raise InputError(f"heuristic missing for terminal {v}") from exc

    if sources is None:
        sources = {graph.origin: 0.0}
    src = sorted(sources)
    if not set(src) <= S:
        raise InputError("sources must lie in S")

    edges = [(u, v) for u in sorted(S) for v in graph.successors(u) if v in Vbar]
    E = len(edges)
    pb = conic.ProgramBuilder()
    y = pb.var(E, lb=0.0, ub=1.0)
    t = pb.var(E)
    z = pb.var(E * n).reshape(E, n) if E else np.zeros((0, n), dtype=int)
    zp = pb.var(E * n).reshape(E, n) if E else np.zeros((0, n), dtype=int)
    alpha = pb.var(len(terminals), lb=0.0, ub=1.0)

    sets = graph.sets
    for k, (u, v) in enumerate(edges):
        pb.cost(t[k], 1.0)
        pb.soc(t[k], [([z[k, i], zp[k, i]], [1.0, -1.0], 0.0) for i in range(n)])
        emit_membership(pb, sets[u], z[k], int(y[k]))
        emit_membership(pb, sets[v], zp[k], int(y[k]))

    out_e: dict[int, list[int]] = {}
    in_e: dict[int, list[int]] = {}
    for k, (u, v) in enumerate(edges):
        out_e.setdefault(u, []).append(k)
        in_e.setdefault(v, []).append(k)

    pb.eq(list(alpha), [1.0] * len(alpha), 1.0)
    for a, v in zip(alpha, terminals):
        pb.cost(a, hv[v])
        ks = in_e.get(v, [])
        pb.eq([y[k] for k in ks] + [a], [1.0] * len(ks) + [-1.0], 0.0)

    beta = None
    if len(src) == 1 and sources[src[0]] == 0.0:
        ks = out_e.get(src[0], [])
        pb.eq([y[k] for k in ks], [1.0] * len(ks), 1.0)
    else:
        beta = pb.var(len(src), lb=0.0, ub=1.0)
        pb.eq(list(beta), [1.0] * len(beta), 1.0)
        for b, v in zip(beta, src):
            pb.cost(b, float(sources[v]))
            ks = out_e.get(v, [])
            pb.eq([y[k] for k in ks] + [b], [1.0] * len(ks) + [-1.0], 0.0)

    for v in sorted(S - set(src)):
        ki, ko = in_e.get(v, []), out_e.get(v, [])
        ones = [1.0] * len(ki) + [-1.0] * len(ko)
        pb.eq([y[k] for k in ki] + [y[k] for k in ko], ones, 0.0)
        for i in range(n):
            pb.eq([zp[k, i] for k in ki] + [z[k, i] for k in ko], ones, 0.0)

    layout = Layout(edges, y, t, z, zp, terminals, alpha, src, beta)
    return pb, layout


def build_sppstar(graph: GcsGraph, S, Sprime, h) -> tuple[conic.ConicProgram, Layout]:
    cut = CutState.of(graph, S, Sprime)
    pb, layout = build_relaxation(graph, cut.S, cut.Sprime, h)
    return pb.build(), layout


def solve_relaxation(
    graph: GcsGraph,
    S,
    Sprime,
    h,
    sources: Mapping[int, float] | None = None,
    accuracy: float = conic.DEFAULT_ACCURACY,
    backend: conic.ConicBackend | None = None,
) -> RelaxedSolution:
    tic = time.perf_counter()
    pb, lay = build_relaxation(graph, S, Sprime, h, sources)
    prog = pb.build()
    sol = conic.solve_conic(prog, accuracy, backend)
    seconds = time.perf_counter() - tic
    S = frozenset(S)
    if sol.status == conic.INFEASIBLE:
        return RelaxedSolution(float("inf"), sol.status, S, tuple(lay.terminals), lay.edges, seconds=seconds)
    if not sol.optimal:
        raise SolverFailure(f"relaxation on |S|={len(S)} failed: {sol.status} {sol.detail}")
    x = sol.x
    return RelaxedSolution(
        objective=float(sol.objective),
        status=sol.status,
        S=S,
        Sprime=tuple(lay.terminals),
        edges=lay.edges,
        y=x[lay.y],
        z=x[lay.z],
        zp=x[lay.zp],
        alpha=x[lay.alpha],
        sources=tuple(lay.sources),
        seconds=seconds,
    )


def solve_sppstar(graph: GcsGraph, S, Sprime, h, accuracy: float = conic.DEFAULT_ACCURACY, backend=None) -> RelaxedSolution:
    """Optimal value and flows of the relaxation on ``(S, S')``.

    An infeasible program is reported with ``objective = inf`` rather than
    raised.
    """
    cut = CutState.of(graph, S, Sprime)
    if isinstance(h, HeuristicTable):
        h.check(graph)
    return solve_relaxation(graph, cut.S, cut.Sprime, h, None, accuracy, backend)


def relaxation_residuals(graph: GcsGraph, sol: RelaxedSolution, tol: float = 1e-6) -> dict[str, float]:
    """Recompute every constraint of the relaxation from the returned values.

    Equalities report the worst absolute residual; perspective and bound
    families report the number of members violating ``tol``.
    """
    edges, y, z, zp, alpha = sol.edges, sol.y, sol.z, sol.zp, sol.alpha
    n = graph.dimension
    terms = list(sol.Sprime)
    src = list(sol.sources) or [graph.origin]
    single = len(src) == 1
    out_y: dict[int, float] = {}
    in_y: dict[int, float] = {}
    out_z: dict[int, np.ndarray] = {}
    in_zp: dict[int, np.ndarray] = {}
    for k, (u, v) in enumerate(edges):
        out_y[u] = out_y.get(u, 0.0) + y[k]
        in_y[v] = in_y.get(v, 0.0) + y[k]
        out_z[u] = out_z.get(u, np.zeros(n)) + z[k]
        in_zp[v] = in_zp.get(v, np.zeros(n)) + zp[k]

    res = {"alpha_sum": abs(alpha.sum() - 1.0)}
    if single:
        res["source_degree"] = abs(out_y.get(src[0], 0.0) - 1.0)
    else:
        res["source_degree"] = abs(sum(out_y.get(b, 0.0) for b in src) - 1.0)
    res["terminal_degree"] = max((abs(in_y.get(v, 0.0) - a) for v, a in zip(terms, alpha)), default=0.0)
    cons_y, cons_z = 0.0, 0.0
    for v in sol.S - set(src):
        cons_y = max(cons_y, abs(in_y.get(v, 0.0) - out_y.get(v, 0.0)))
        diff = in_zp.get(v, np.zeros(n)) - out_z.get(v, np.zeros(n))
        cons_z = max(cons_z, float(np.abs(diff).max()))
    res["conservation_y"] = cons_y
    res["conservation_z"] = cons_z
    res["bounds"] = float(
        np.sum(y < -tol) + np.sum(y > 1 + tol) + np.sum(alpha < -tol) + np.sum(alpha > 1 + tol)
    )
    res["perspective_tail"] = float(
        sum(not perspective_membership(graph.sets[u], z[k], y[k], tol) for k, (u, _) in enumerate(edges))
    )
    res["perspective_head"] = float(
        sum(not perspective_membership(graph.sets[v], zp[k], y[k], tol) for k, (_, v) in enumerate(edges))
    )
    return res


def fixed_path_program(sets: Sequence[ConvexSet]) -> tuple[conic.ConicProgram, np.ndarray]:
    n = sets[0].dim
    pb = conic.ProgramBuilder()
    x = pb.var(len(sets) * n).reshape(len(sets), n)
    for xi, s in zip(x, sets):
        emit_membership(pb, s, xi)
    for i in range(len(sets) - 1):
        t = int(pb.var(1)[0])
        pb.cost(t, 1.0)
        pb.soc(t, [([x[i, j], x[i + 1, j]], [1.0, -1.0], 0.0) for j in range(n)])
    return pb.build(), x


def solve_fixed_path(
    graph: GcsGraph, path: Sequence[int], accuracy: float = conic.DEFAULT_ACCURACY, backend=None
) -> FeasibleSolution:
    """Best points along a given vertex sequence."""
    path = tuple(int(v) for v in path)
    if not path:
        raise InputError("path must contain at least one vertex")
    edges = set(graph.edges)
    for v in path:
        if not 0 <= v < graph.n_vertices:
            raise InputError(f"unknown vertex {v} in path")
    for u, v in zip(path, path[1:]):
        if (u, v) not in edges:
            raise InputError(f"path uses missing edge ({u}, {v})")
    sets = [graph.sets[v] for v in path]
    if len(path) == 1:
        return FeasibleSolution(path, np.array([sets[0].centroid()]), 0.0)
    prog, x = fixed_path_program(sets)
    sol = conic.solve_conic(prog, accuracy, backend)
    if not sol.optimal:
        raise SolverFailure(f"fixed-path program failed: {sol.status} {sol.detail}")
    pts = np.array([project(s, p) for s, p in zip(sets, sol.x[x])])
    cost = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    return FeasibleSolution(path, pts, cost)
