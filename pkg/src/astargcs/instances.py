"""Instance generators (mazes, bars, voxel villages, random) and JSON I/O.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``, so a
generator called with the same arguments yields the same instance on every
platform. The file format records the generator and its parameters under
``"provenance"``.
"""
from __future__ import annotations

import json
from collections import deque
from itertools import permutations
from pathlib import Path

import numpy as np

from .core import ConvexSet, GcsError, GcsGraph, InputError

FORMAT_VERSION = 1


class GenerationError(GcsError):
    pass


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _clique_edges(groups) -> set[tuple[int, int]]:
    return {(u, v) for g in groups for u, v in permutations(g, 2)}


# -- mazes ------------------------------------------------------------------


def carve_maze(rows: int, cols: int, seed: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Passages of a perfect maze, by iterative randomized depth-first search.

    Cells are ``(row, col)``; each passage is an ordered pair of adjacent cells
    with the smaller cell first.
    """
    rng = _rng(seed)
    seen = {(0, 0)}
    stack = [(0, 0)]
    passages = []
    while stack:
        r, c = stack[-1]
        nbrs = [
            (r + dr, c + dc)
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if 0 <= r + dr < rows and 0 <= c + dc < cols and (r + dr, c + dc) not in seen
        ]
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(rng.integers(len(nbrs)))]
        seen.add(nxt)
        passages.append(tuple(sorted([(r, c), nxt])))
        stack.append(nxt)
    return sorted(passages)


def _passage_segment(a, b) -> ConvexSet:
    (r, c), (r2, c2) = a, b
    if r == r2:  # horizontal neighbours share a vertical side at x = c + 1
        return ConvexSet.segment([c + 1, r], [c + 1, r + 1])
    return ConvexSet.segment([c, r + 1], [c + 1, r + 1])


def gen_maze(
    rows: int,
    cols: int,
    seed: int,
    origin_cell: tuple[int, int] = (0, 0),
    dest_cell: tuple[int, int] | None = None,
) -> GcsGraph:
    """GCS of a perfect maze on a unit grid.

    Vertices are the open sides between adjacent cells (segments), followed
    by singleton origin and destination vertices at cell centers. Two sides
    are joined, both ways, when they bound the same cell.
    """
    if rows < 2 or cols < 2:
        raise InputError("maze needs at least 2 rows and 2 columns")
    dest_cell = (rows - 1, cols - 1) if dest_cell is None else tuple(dest_cell)
    origin_cell = tuple(origin_cell)
    for cell in (origin_cell, dest_cell):
        if not (0 <= cell[0] < rows and 0 <= cell[1] < cols):
            raise InputError(f"cell {cell} is outside the {rows}x{cols} maze")
    if origin_cell == dest_cell:
        raise InputError("origin and destination cells coincide")

    passages = carve_maze(rows, cols, seed)
    sets = [_passage_segment(a, b) for a, b in passages]
    sides: dict[tuple[int, int], list[int]] = {}
    for i, (a, b) in enumerate(passages):
        sides.setdefault(a, []).append(i)
        sides.setdefault(b, []).append(i)
    edges = _clique_edges(sides.values())

    s, d = len(sets), len(sets) + 1
    for cell, v in ((origin_cell, s), (dest_cell, d)):
        r, c = cell
        sets.append(ConvexSet.point([c + 0.5, r + 0.5]))
        for i in sides[cell]:
            edges |= {(v, i), (i, v)}
    prov = {
        "generator": "maze", "version": FORMAT_VERSION, "prng": "numpy PCG64",
        "rows": rows, "cols": cols, "seed": seed,
        "origin_cell": list(origin_cell), "dest_cell": list(dest_cell),
    }
    return GcsGraph(tuple(sets), tuple(sorted(edges)), s, d, prov)


# -- axis-aligned bars ---------------------------------------------------------


def gcs_from_bars(bars, origin_sq=None, dest_sq=None, provenance=None) -> GcsGraph:
    """GCS whose vertices are the unit squares covered by ``bars``.

    ``bars`` is a list of square lists, each square an integer ``(x, y)``
    lower-left corner. Squares of a common bar form a clique. Origin and
    destination default to the bottom-left-most and top-right-most squares.
    """
    squares = sorted({tuple(q) for bar in bars for q in bar})
    index = {q: i for i, q in enumerate(squares)}
    origin_sq = tuple(origin_sq) if origin_sq is not None else min(squares, key=lambda q: (q[0] + q[1], q[1]))
    dest_sq = tuple(dest_sq) if dest_sq is not None else max(squares, key=lambda q: (q[0] + q[1], q[1]))
    if origin_sq not in index or dest_sq not in index:
        raise InputError("origin/destination square is not covered by any bar")
    sets = [ConvexSet.box([x, y], [x + 1, y + 1]) for x, y in squares]
    edges = _clique_edges([[index[tuple(q)] for q in bar] for bar in bars])
    s, d = len(sets), len(sets) + 1
    for q, v in ((origin_sq, s), (dest_sq, d)):
        sets.append(ConvexSet.point([q[0] + 0.5, q[1] + 0.5]))
        edges |= {(v, index[q]), (index[q], v)}
    return GcsGraph(tuple(sets), tuple(sorted(edges)), s, d, dict(provenance or {}))


def gen_bars(
    width: int,
    height: int,
    bar_count: int,
    seed: int,
    min_len: int = 3,
    max_len: int | None = None,
    max_retries: int = 100,
    origin_sq=None,
    dest_sq=None,
) -> GcsGraph:
    """Random unit-thick bars, each placed through a square already covered."""
    if bar_count < 2:
        raise InputError("bar_count must be at least 2")
    max_len = max(width, height) // 2 if max_len is None else max_len
    max_len = max(max_len, min_len)
    if min_len > max(width, height):
        raise InputError("grid too small for the minimum bar length")
    rng = _rng(seed)
    bars: list[list[tuple[int, int]]] = []
    covered: set[tuple[int, int]] = set()
    for k in range(bar_count):
        for _ in range(max_retries):
            horiz = bool(rng.integers(2))
            span = width if horiz else height
            if span < min_len:
                horiz, span = not horiz, height if horiz else width
            length = int(rng.integers(min_len, min(max_len, span) + 1))
            if k == 0:
                ax, ay = int(rng.integers(width)), int(rng.integers(height))
            else:
                pool = sorted(covered)
                ax, ay = pool[int(rng.integers(len(pool)))]
            offset = int(rng.integers(length))
            start = (ax if horiz else ay) - offset
            start = min(max(start, 0), span - length)
            if horiz:
                bar = [(start + i, ay) for i in range(length)]
            else:
                bar = [(ax, start + i) for i in range(length)]
            if k == 0 or not set(bar) <= covered:
                break
        else:
            raise GenerationError(f"could not place bar {k} in {max_retries} tries")
        bars.append(bar)
        covered |= set(bar)
    prov = {
        "generator": "bars", "version": FORMAT_VERSION, "prng": "numpy PCG64",
        "width": width, "height": height, "bar_count": bar_count, "seed": seed,
        "min_len": min_len, "max_len": max_len, "bars": [[list(q) for q in b] for b in bars],
    }
    if origin_sq is not None:
        prov["origin_sq"] = list(origin_sq)
    if dest_sq is not None:
        prov["dest_sq"] = list(dest_sq)
    return gcs_from_bars(bars, origin_sq, dest_sq, prov)


# -- voxel villages -------------------------------------------------------------


def gcs_from_voxels(free: np.ndarray, origin_voxel, dest_voxel, provenance=None) -> GcsGraph:
    """GCS over the shared faces of adjacent free voxels.

    A face is a box with one degenerate axis. Faces of the same voxel form a
    clique; the singleton terminals sit at the centers of their voxels.
    """
    free = np.asarray(free, dtype=bool)
    origin_voxel, dest_voxel = tuple(origin_voxel), tuple(dest_voxel)
    faces = []
    owner: dict[tuple[int, ...], list[int]] = {}
    for a in zip(*np.nonzero(free)):
        a = tuple(int(i) for i in a)
        for k in range(3):
            b = list(a)
            b[k] += 1
            b = tuple(b)
            if b[k] >= free.shape[k] or not free[b]:
                continue
            lo = np.array(a, dtype=float)
            lo[k] += 1
            hi = np.array(a, dtype=float) + 1
            idx = len(faces)
            faces.append(ConvexSet.box(lo, hi))
            owner.setdefault(a, []).append(idx)
            owner.setdefault(b, []).append(idx)
    if origin_voxel not in owner or dest_voxel not in owner:
        raise GenerationError("origin or destination voxel has no free neighbour")
    edges = _clique_edges(owner.values())
    sets = list(faces)
    s, d = len(sets), len(sets) + 1
    for vox, v in ((origin_voxel, s), (dest_voxel, d)):
        sets.append(ConvexSet.point(np.array(vox, dtype=float) + 0.5))
        for i in owner[vox]:
            edges |= {(v, i), (i, v)}
    return GcsGraph(tuple(sets), tuple(sorted(edges)), s, d, dict(provenance or {}))


def _component(free: np.ndarray, start) -> set:
    seen = {start}
    todo = deque([start])
    while todo:
        a = todo.popleft()
        for k in range(3):
            for step in (-1, 1):
                b = list(a)
                b[k] += step
                b = tuple(b)
                if 0 <= b[k] < free.shape[k] and free[b] and b not in seen:
                    seen.add(b)
                    todo.append(b)
    return seen


def gen_village(
    nx: int,
    ny: int,
    nz: int,
    seed: int,
    blocked: float = 0.3,
    origin_voxel=(0, 0, 0),
    dest_voxel=None,
    max_retries: int = 100,
) -> GcsGraph:
    """Random voxel grid with a fraction ``blocked`` of occupied voxels.

    Only the free component containing the origin is kept; draws without a
    free route to the destination corner are rejected.
    """
    if nx * ny * nz < 8:
        raise InputError("village grid needs at least 8 voxels")
    dest_voxel = (nx - 1, ny - 1, nz - 1) if dest_voxel is None else tuple(dest_voxel)
    origin_voxel = tuple(origin_voxel)
    rng = _rng(seed)
    for attempt in range(max_retries):
        free = rng.random((nx, ny, nz)) >= blocked
        free[origin_voxel] = free[dest_voxel] = True
        comp = _component(free, origin_voxel)
        if dest_voxel in comp:
            break
    else:
        raise GenerationError(f"no connected village after {max_retries} draws")
    keep = np.zeros_like(free)
    for a in comp:
        keep[a] = True
    prov = {
        "generator": "village", "version": FORMAT_VERSION, "prng": "numpy PCG64",
        "shape": [nx, ny, nz], "seed": seed, "blocked": blocked, "attempt": attempt,
        "origin_voxel": list(origin_voxel), "dest_voxel": list(dest_voxel),
    }
    return gcs_from_voxels(keep, origin_voxel, dest_voxel, prov)


# -- small random instances ------------------------------------------------------


def gen_random(
    n_vertices: int,
    seed: int,
    max_edges: int = 20,
    kinds=("point", "segment", "box"),
    dim: int = 2,
    extent: float = 10.0,
) -> GcsGraph:
    """Small random instance for exhaustive checking (origin 0, destination n-1)."""
    if n_vertices < 2:
        raise InputError("need at least two vertices")
    rng = _rng(seed)
    sets = []
    for _ in range(n_vertices):
        kind = kinds[int(rng.integers(len(kinds)))]
        p = rng.uniform(0, extent, dim)
        if kind == "point":
            sets.append(ConvexSet.point(p))
        elif kind == "segment":
            sets.append(ConvexSet.segment(p, p + rng.uniform(-3, 3, dim)))
        elif kind == "box":
            sets.append(ConvexSet.box(p, p + rng.uniform(0.2, 2.5, dim)))
        else:
            raise InputError(f"unsupported kind {kind!r} for random instances")
    s, d = 0, n_vertices - 1
    inner = [int(v) for v in rng.permutation(np.arange(1, n_vertices - 1))]
    hops = inner[: int(rng.integers(0, len(inner) + 1))]
    chain = [s, *hops, d]
    edges = {(u, v) for u, v in zip(chain, chain[1:])}
    candidates = [(u, v) for u in range(n_vertices) for v in range(n_vertices) if u != v and (u, v) not in edges]
    order = rng.permutation(len(candidates))
    for i in order:
        if len(edges) >= max(max_edges, len(chain) - 1):
            break
        edges.add(candidates[int(i)])
    prov = {"generator": "random", "version": FORMAT_VERSION, "n": n_vertices, "seed": seed, "kinds": list(kinds)}
    return GcsGraph(tuple(sets), tuple(sorted(edges)), s, d, prov)


# -- origin sweeps ------------------------------------------------------------------


def origin_choices(graph: GcsGraph) -> list[tuple[int, ...]]:
    """Cells (maze) or squares (bars) that may host a relocated origin."""
    prov = graph.provenance
    gen = prov.get("generator")
    if gen == "maze":
        dest = tuple(prov["dest_cell"])
        return [(r, c) for r in range(prov["rows"]) for c in range(prov["cols"]) if (r, c) != dest]
    if gen == "bars":
        dest = graph.sets[graph.destination].data[0] - 0.5
        squares = sorted({tuple(q) for b in prov["bars"] for q in b})
        return [q for q in squares if not np.array_equal(q, dest)]
    raise InputError(f"origin sweeps need a maze or bars instance, not {gen!r}")


def relocate_origin(graph: GcsGraph, where) -> GcsGraph:
    """Regenerate ``graph`` from its provenance with the origin moved to ``where``.

    Vertex ids are unchanged: only the origin's position and edges move.
    """
    prov = graph.provenance
    gen = prov.get("generator")
    if gen == "maze":
        return gen_maze(prov["rows"], prov["cols"], prov["seed"], tuple(where), tuple(prov["dest_cell"]))
    if gen == "bars":
        dest = tuple(int(v) for v in graph.sets[graph.destination].data[0] - 0.5)
        return gen_bars(prov["width"], prov["height"], prov["bar_count"], prov["seed"], prov["min_len"],
                        prov["max_len"], origin_sq=tuple(where), dest_sq=dest)
    raise InputError(f"cannot relocate the origin of a {gen!r} instance")


# -- JSON --------------------------------------------------------------------------


def instance_to_json(graph: GcsGraph) -> dict:
    out = {
        "dimension": graph.dimension,
        "vertices": [{"id": i, "set": s.to_json()} for i, s in enumerate(graph.sets)],
        "edges": [[u, v] for u, v in graph.edges],
        "origin": graph.origin,
        "destination": graph.destination,
    }
    if graph.provenance:
        out["provenance"] = graph.provenance
    return out


def dumps_instance(graph: GcsGraph) -> str:
    return json.dumps(instance_to_json(graph), indent=1) + "\n"


def instance_from_json(obj: dict) -> GcsGraph:
    if not isinstance(obj, dict):
        raise InputError("instance: top level must be an object")
    for key in ("dimension", "vertices", "edges", "origin", "destination"):
        if key not in obj:
            raise InputError(f"instance: missing key {key!r}")
    dim = obj["dimension"]
    verts = obj["vertices"]
    by_id = {}
    for k, v in enumerate(verts):
        where = f"vertices[{k}]"
        if "id" not in v or "set" not in v:
            raise InputError(f"{where}: needs 'id' and 'set'")
        if v["id"] in by_id:
            raise InputError(f"{where}: duplicate id {v['id']}")
        s = ConvexSet.from_json(v["set"], f"{where}.set")
        if s.dim != dim:
            raise InputError(f"{where}.set: dimension {s.dim} != {dim}")
        by_id[v["id"]] = s
    if sorted(by_id) != list(range(len(by_id))):
        raise InputError("instance: vertex ids must be 0..|V|-1")
    edges = []
    for k, e in enumerate(obj["edges"]):
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise InputError(f"edges[{k}]: expected [u, v]")
        edges.append((int(e[0]), int(e[1])))
    sets = tuple(by_id[i] for i in range(len(by_id)))
    return GcsGraph(sets, tuple(edges), int(obj["origin"]), int(obj["destination"]), dict(obj.get("provenance", {})))


def save_instance(graph: GcsGraph, path) -> None:
    Path(path).write_text(dumps_instance(graph), encoding="utf-8")


def load_instance(path) -> GcsGraph:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    try:
        return instance_from_json(obj)
    except GcsError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
