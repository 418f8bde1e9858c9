"""Graphs of convex sets: sets, graphs, cut-sets and the geometry they need."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import conic

KINDS = ("point", "segment", "box", "hpolytope")
DEFAULT_TOL = 1e-6


class GcsError(Exception):
    """Base class for errors raised by this package."""


class InputError(GcsError, ValueError):
    """Malformed arguments or instance data."""


class InvariantError(GcsError, ValueError):
    """A structural invariant (compactness, reachability, ...) does not hold."""


class NoPathError(GcsError):
    """The destination cannot be reached."""


class SolverFailure(GcsError):
    """The conic backend failed; ``partial`` carries whatever was computed."""

    def __init__(self, msg: str, partial=None):
        super().__init__(msg)
        self.partial = partial


def _vec(x, name: str) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(-1)
    if a.size == 0 or not np.all(np.isfinite(a)):
        raise InputError(f"{name} must be a non-empty finite vector")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """A compact convex set attached to a vertex.

    ``data`` holds, per kind: point ``(p,)``; segment ``(a, b)``; box
    ``(lo, hi)``; hpolytope ``(A, b, lo, hi)``. For an hpolytope the set is
    ``{x : A x <= b}`` intersected with its bounding box ``[lo, hi]``, which
    makes compactness hold by construction.
    """

    kind: str
    data: tuple

    @classmethod
    def point(cls, p) -> ConvexSet:
        return cls("point", (_vec(p, "point"),))

    @classmethod
    def segment(cls, a, b) -> ConvexSet:
        a, b = _vec(a, "segment start"), _vec(b, "segment end")
        if a.shape != b.shape:
            raise InputError("segment endpoints differ in dimension")
        return cls("segment", (a, b))

    @classmethod
    def box(cls, lo, hi) -> ConvexSet:
        lo, hi = _vec(lo, "box lo"), _vec(hi, "box hi")
        if lo.shape != hi.shape:
            raise InputError("box corners differ in dimension")
        if np.any(lo > hi):
            raise InvariantError("box requires lo <= hi componentwise")
        return cls("box", (lo, hi))

    @classmethod
    def hpolytope(cls, A, b, lo, hi) -> ConvexSet:
        A = np.array(A, dtype=float)
        b = _vec(b, "hpolytope b")
        lo, hi = _vec(lo, "bbox lo"), _vec(hi, "bbox hi")
        if A.ndim != 2 or A.shape != (len(b), len(lo)) or lo.shape != hi.shape:
            raise InputError("hpolytope needs A (m x n), b (m), and an n-dimensional bbox")
        if np.any(lo > hi):
            raise InvariantError("hpolytope bbox requires lo <= hi")
        A.setflags(write=False)
        s = cls("hpolytope", (A, b, lo, hi))
        s.centroid()  # raises on an empty polytope
        return s

    @property
    def dim(self) -> int:
        return len(self.data[-1]) if self.kind == "hpolytope" else len(self.data[0])

    def __eq__(self, other):
        if not isinstance(other, ConvexSet) or other.kind != self.kind:
            return NotImplemented if not isinstance(other, ConvexSet) else False
        return all(np.array_equal(x, y) for x, y in zip(self.data, other.data))

    def __hash__(self):
        return hash((self.kind, tuple(a.tobytes() for a in self.data)))

    def __repr__(self):
        parts = ", ".join(np.array2string(a, separator=",") for a in self.data)
        return f"ConvexSet.{self.kind}({parts})"

    def centroid(self) -> np.ndarray:
        cached = self.__dict__.get("_centroid")
        if cached is None:
            cached = centroid(self)
            object.__setattr__(self, "_centroid", cached)
        return cached

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "point":
            d["p"] = self.data[0].tolist()
        elif self.kind == "segment":
            d["a"], d["b"] = self.data[0].tolist(), self.data[1].tolist()
        elif self.kind == "box":
            d["lo"], d["hi"] = self.data[0].tolist(), self.data[1].tolist()
        else:
            d["A"] = self.data[0].tolist()
            d["b"] = self.data[1].tolist()
            d["bbox"] = {"lo": self.data[2].tolist(), "hi": self.data[3].tolist()}
        return d

    @classmethod
    def from_json(cls, d: dict, where: str = "set") -> ConvexSet:
        def need(key, src=d):
            if key not in src:
                raise InputError(f"{where}: missing key {key!r}")
            return src[key]

        kind = need("kind")
        if kind == "point":
            return cls.point(need("p"))
        if kind == "segment":
            return cls.segment(need("a"), need("b"))
        if kind == "box":
            return cls.box(need("lo"), need("hi"))
        if kind == "hpolytope":
            if "bbox" not in d:
                raise InvariantError(f"{where}: hpolytope requires a 'bbox' to certify boundedness")
            bbox = d["bbox"]
            return cls.hpolytope(need("A"), need("b"), need("lo", bbox), need("hi", bbox))
        raise InputError(f"{where}: unknown set kind {kind!r}")


@dataclass(frozen=True, eq=False)
class GcsGraph:
    """Directed graph over convex sets; vertex ids are ``0..len(sets)-1``."""

    sets: tuple[ConvexSet, ...]
    edges: tuple[tuple[int, int], ...]
    origin: int
    destination: int
    provenance: dict = field(default_factory=dict)
    check_path: bool = True

    def __post_init__(self):
        sets = tuple(self.sets)
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "edges", edges)
        n = len(sets)
        if n < 2:
            raise InvariantError("a graph needs at least an origin and a destination")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise InvariantError(f"all sets must share one dimension, found {sorted(dims)}")
        for name, v in (("origin", self.origin), ("destination", self.destination)):
            if not 0 <= v < n:
                raise InputError(f"{name} {v} is not a vertex id")
        if self.origin == self.destination:
            raise InvariantError("origin and destination must differ")
        seen = set()
        out: list[list[int]] = [[] for _ in range(n)]
        inc: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise InvariantError(f"self-loop at vertex {u}")
            if (u, v) in seen:
                raise InvariantError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            out[u].append(v)
            inc[v].append(u)
        object.__setattr__(self, "_out", tuple(tuple(sorted(a)) for a in out))
        object.__setattr__(self, "_in", tuple(tuple(sorted(a)) for a in inc))
        if self.check_path and self.destination not in self.reachable_from(self.origin):
            raise InvariantError("destination is not reachable from origin")

    @property
    def dimension(self) -> int:
        return self.sets[0].dim

    @property
    def n_vertices(self) -> int:
        return len(self.sets)

    def successors(self, u: int) -> tuple[int, ...]:
        return self._out[u]

    def predecessors(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def reachable_from(self, src: int) -> set[int]:
        seen = {src}
        todo = deque([src])
        while todo:
            u = todo.popleft()
            for v in self._out[u]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return seen

    def reaching(self, dst: int) -> set[int]:
        """Vertices with a directed path to ``dst`` (``dst`` included)."""
        seen = {dst}
        todo = deque([dst])
        while todo:
            v = todo.popleft()
            for u in self._in[v]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return seen

    def centroids(self) -> np.ndarray:
        return np.array([s.centroid() for s in self.sets])

    def with_terminals(self, origin: int | None = None, destination: int | None = None) -> GcsGraph:
        return GcsGraph(
            self.sets,
            self.edges,
            self.origin if origin is None else origin,
            self.destination if destination is None else destination,
            dict(self.provenance),
        )

    def __eq__(self, other):
        if not isinstance(other, GcsGraph):
            return NotImplemented
        return (
            self.sets == other.sets
            and self.edges == other.edges
            and self.origin == other.origin
            and self.destination == other.destination
        )

    __hash__ = None


@dataclass(frozen=True)
class CutState:
    S: frozenset
    N: frozenset
    Sprime: frozenset

    @classmethod
    def of(cls, graph: GcsGraph, S: Iterable[int], Sprime: Iterable[int] | None = None) -> CutState:
        S = frozenset(int(v) for v in S)
        if graph.origin not in S or graph.destination in S:
            raise InputError("S must contain the origin and exclude the destination")
        N = frozenset(neighborhood(graph, S))
        Sp = N if Sprime is None else frozenset(int(v) for v in Sprime)
        if not Sp:
            raise InputError("S' must be non-empty")
        if not Sp <= N:
            raise InputError(f"S' must be a subset of N_S; extra {sorted(Sp - N)}")
        return cls(S, N, Sp)


@dataclass(frozen=True, eq=False)
class HeuristicTable:
    """Per-vertex underestimate of the cost-to-go to the destination."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvariantError("heuristic values must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, v: int) -> float:
        return float(self.values[v])

    def __len__(self):
        return len(self.values)

    @classmethod
    def zeros(cls, graph: GcsGraph) -> HeuristicTable:
        return cls(np.zeros(graph.n_vertices), {"method": "zero"})

    def check(self, graph: GcsGraph) -> None:
        if len(self) != graph.n_vertices:
            raise InputError("heuristic table does not cover every vertex")
        if self.values[graph.destination] != 0.0:
            raise InvariantError("h(destination) must be 0")

    def to_json(self) -> dict:
        return {"values": {str(i): float(x) for i, x in enumerate(self.values)}, "meta": dict(self.meta)}

    @classmethod
    def from_json(cls, d: dict) -> HeuristicTable:
        if "values" not in d:
            raise InputError("heuristic file: missing key 'values'")
        vals = d["values"]
        n = len(vals)
        try:
            arr = [float(vals[str(i)]) for i in range(n)]
        except KeyError as exc:
            raise InputError(f"heuristic file: vertex ids must be 0..{n - 1}") from exc
        return cls(np.array(arr), dict(d.get("meta", {})))


def neighborhood(graph: GcsGraph, S: Iterable[int]) -> list[int]:
    S = set(S)
    n = graph.n_vertices
    bad = [v for v in S if not (isinstance(v, (int, np.integer)) and 0 <= v < n)]
    if bad:
        raise InputError(f"unknown vertex ids in S: {bad}")
    return sorted({v for u in S for v in graph.successors(u) if v not in S})


def reverse(graph: GcsGraph, origin: int | None = None, destination: int | None = None) -> GcsGraph:
    """Flip every edge. Terminals swap roles unless given explicitly."""
    return GcsGraph(
        graph.sets,
        tuple((v, u) for u, v in graph.edges),
        graph.destination if origin is None else origin,
        graph.origin if destination is None else destination,
        dict(graph.provenance),
        check_path=False,
    )


# -- membership rows --------------------------------------------------------


def emit_membership(pb: conic.ProgramBuilder, cset: ConvexSet, z: Sequence[int], y: int | None = None) -> None:
    """Constrain ``(x[z], x[y])`` to the perspective cone of ``cset``.

    With ``y=None`` the scale is the constant 1, i.e. plain membership of
    ``x[z]`` in the set.
    """
    z = [int(i) for i in z]

    def row(cols, vals, ycoef, rhs=0.0, ineq=False):
        if y is None:
            rhs -= ycoef
        else:
            cols, vals = cols + [y], vals + [ycoef]
        (pb.ge if ineq else pb.eq)(cols, vals, rhs)

    if cset.kind == "point":
        (p,) = cset.data
        for zi, pi in zip(z, p):
            row([zi], [1.0], -pi)
    elif cset.kind == "segment":
        a, b = cset.data
        d = b - a
        sig = int(pb.var(1, lb=0.0)[0])
        for zi, ai, di in zip(z, a, d):
            row([zi, sig], [1.0, -di], -ai)
        row([sig], [-1.0], 1.0, ineq=True)  # sigma <= y
    elif cset.kind == "box":
        lo, hi = cset.data
        _box_rows(row, z, lo, hi)
    else:
        A, b, lo, hi = cset.data
        for ak, bk in zip(A, b):
            nz = np.flatnonzero(ak)
            row([z[j] for j in nz], [-ak[j] for j in nz], bk, ineq=True)
        _box_rows(row, z, lo, hi)


def _box_rows(row, z, lo, hi):
    for zi, l, h in zip(z, lo, hi):
        if l == h:
            row([zi], [1.0], -l)
        else:
            row([zi], [1.0], -l, ineq=True)
            row([zi], [-1.0], h, ineq=True)


# -- geometry ---------------------------------------------------------------


def centroid(cset: ConvexSet) -> np.ndarray:
    """Representative interior point: midpoint, box center, or Chebyshev center."""
    if cset.kind == "point":
        return cset.data[0].copy()
    if cset.kind in ("segment", "box"):
        return 0.5 * (cset.data[0] + cset.data[1])
    A, b, lo, hi = cset.data
    n = len(lo)
    # max r  s.t.  a_k x + r |a_k| <= b_k  and  lo + r <= x <= hi - r  (nondegenerate axes)
    pb = conic.ProgramBuilder()
    x = pb.var(n)
    r = int(pb.var(1, lb=0.0)[0])
    pb.cost(r, -1.0)
    for ak, bk in zip(A, b):
        nz = list(np.flatnonzero(ak))
        pb.ge([x[j] for j in nz] + [r], [-ak[j] for j in nz] + [-np.linalg.norm(ak)], -bk)
    for j in range(n):
        if lo[j] == hi[j]:
            pb.eq([x[j]], [1.0], lo[j])
        else:
            pb.ge([x[j], r], [1.0, -1.0], lo[j])
            pb.ge([x[j], r], [-1.0, -1.0], -hi[j])
    sol = conic.solve_conic(pb.build())
    if sol.status == conic.INFEASIBLE:
        raise InvariantError("hpolytope is empty")
    if not sol.optimal:
        raise SolverFailure(f"Chebyshev center failed: {sol.detail}")
    c = np.clip(sol.x[x], lo, hi)
    return c


def project(cset: ConvexSet, x: np.ndarray) -> np.ndarray:
    """Euclidean projection for the closed-form kinds; hpolytopes are returned as is."""
    x = np.asarray(x, dtype=float)
    if cset.kind == "point":
        return cset.data[0].copy()
    if cset.kind == "segment":
        a, b = cset.data
        d = b - a
        dd = d @ d
        s = 0.0 if dd == 0 else float(np.clip((x - a) @ d / dd, 0.0, 1.0))
        return a + s * d
    if cset.kind == "box":
        return np.clip(x, cset.data[0], cset.data[1])
    return np.clip(x, cset.data[2], cset.data[3])


def _gap_boxes(lo1, hi1, lo2, hi2) -> float:
    g = np.maximum(0.0, np.maximum(lo1 - hi2, lo2 - hi1))
    return float(np.linalg.norm(g))


def set_distance(A: ConvexSet, B: ConvexSet) -> float:
    """Smallest Euclidean distance between a point of ``A`` and a point of ``B``."""
    if A.dim != B.dim:
        raise InputError(f"dimension mismatch: {A.dim} vs {B.dim}")
    if B.kind == "point" and A.kind != "point":
        A, B = B, A
    if A.kind == "point" and B.kind in ("point", "segment", "box"):
        p = A.data[0]
        return float(np.linalg.norm(p - project(B, p)))
    if A.kind == "box" and B.kind == "box":
        return _gap_boxes(*A.data, *B.data)

    n = A.dim
    pb = conic.ProgramBuilder()
    x, xp = pb.var(n), pb.var(n)
    t = int(pb.var(1)[0])
    emit_membership(pb, A, x)
    emit_membership(pb, B, xp)
    pb.soc(t, [([x[i], xp[i]], [1.0, -1.0], 0.0) for i in range(n)])
    pb.cost(t, 1.0)
    sol = conic.solve_conic(pb.build())
    if not sol.optimal:
        raise SolverFailure(f"set distance program failed: {sol.status} {sol.detail}")
    return max(0.0, float(np.linalg.norm(sol.x[x] - sol.x[xp])))


def perspective_membership(cset: ConvexSet, z, lam: float, tol: float = DEFAULT_TOL) -> bool:
    """Is ``(z, lam)`` in the closed perspective cone ``{(x, l): l >= 0, x in l*X}``?"""
    z = np.asarray(z, dtype=float)
    if lam < -tol:
        return False
    lam = max(lam, 0.0)
    if cset.kind == "point":
        return bool(np.abs(z - lam * cset.data[0]).max() <= tol)
    if cset.kind == "segment":
        a, b = cset.data
        d = b - a
        w = z - lam * a
        dd = d @ d
        sig = 0.0 if dd == 0 else float(np.clip(w @ d / dd, 0.0, lam))
        return bool(np.abs(w - sig * d).max() <= tol)
    if cset.kind == "box":
        lo, hi = cset.data
        return bool(np.all(z >= lam * lo - tol) and np.all(z <= lam * hi + tol))
    A, b, lo, hi = cset.data
    return bool(
        np.all(A @ z <= lam * b + tol) and np.all(z >= lam * lo - tol) and np.all(z <= lam * hi + tol)
    )


def contains(cset: ConvexSet, x, tol: float = DEFAULT_TOL) -> bool:
    return perspective_membership(cset, x, 1.0, tol)
