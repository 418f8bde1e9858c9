"""Exact solutions for small instances by enumerating every simple path.

Restricting to simple paths loses nothing: if a walk visits ``v`` twice, at
points ``x1`` then ``x2``, dropping the loop in between and keeping ``x1``
replaces ``|x1 - x2| + |x2 - x_next|`` by ``|x1 - x_next|``, which the
triangle inequality says is no longer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import GcsError, GcsGraph, NoPathError
from .relaxation import FeasibleSolution, solve_fixed_path

DEFAULT_CAP = 100_000


class TooLargeError(GcsError):
    """More simple paths than the oracle is allowed to enumerate."""


def enumerate_paths(graph: GcsGraph, src: int, dst: int, cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    """All simple ``src -> dst`` paths in lexicographic order."""
    if cap < 1:
        raise ValueError("cap must be positive")
    if src == dst:
        return [(src,)]
    found: list[tuple[int, ...]] = []
    path = [src]
    on_path = {src}
    stack = [iter(graph.successors(src))]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if nxt in on_path:
            continue
        if nxt == dst:
            found.append(tuple(path) + (dst,))
            if len(found) > cap:
                raise TooLargeError(f"more than {cap} simple paths from {src} to {dst}")
            continue
        path.append(nxt)
        on_path.add(nxt)
        stack.append(iter(graph.successors(nxt)))
    return found


def exact_opt(
    graph: GcsGraph, src: int | None = None, dst: int | None = None, cap: int = DEFAULT_CAP
) -> tuple[float, FeasibleSolution]:
    src = graph.origin if src is None else src
    dst = graph.destination if dst is None else dst
    best = None
    for path in enumerate_paths(graph, src, dst, cap):
        sol = solve_fixed_path(graph, path)
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise NoPathError(f"no path from {src} to {dst}")
    return best.cost, best


@dataclass
class AdmissibilityReport:
    checked: int = 0
    violations: list[tuple[int, float, float]] = field(default_factory=list)
    c_opt: dict[int, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def cost_to_go(graph: GcsGraph, cap: int = DEFAULT_CAP) -> dict[int, float]:
    """Exact optimal cost from every vertex that can reach the destination."""
    d = graph.destination
    return {v: exact_opt(graph, v, d, cap)[0] for v in sorted(graph.reaching(d))}


def check_admissible(graph: GcsGraph, h, cap: int = DEFAULT_CAP, tol: float = 1e-6,
                     c_opt: dict[int, float] | None = None) -> AdmissibilityReport:
    c_opt = cost_to_go(graph, cap) if c_opt is None else c_opt
    rep = AdmissibilityReport(c_opt=c_opt)
    for v, c in c_opt.items():
        rep.checked += 1
        if float(h[v]) > c + tol:
            rep.violations.append((v, float(h[v]), c))
    return rep
