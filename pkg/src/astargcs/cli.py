"""Command-line entry point: ``astargcs {generate,heuristic,solve,oracle,bench,plot}``.

Exit codes: 0 success, 1 user error, 2 no path, 3 internal invariant failure,
4 numerical failure of the conic solver.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, conic
from .core import GcsError, HeuristicTable, InputError, NoPathError, SolverFailure
from .heuristics import blend, h1_table, h2_expand_freeze, reseat_origin, sinit_from_astar
from .instances import (
    gen_bars,
    gen_maze,
    gen_random,
    gen_village,
    load_instance,
    origin_choices,
    relocate_origin,
    save_instance,
)
from .oracle import exact_opt
from .search import (
    InternalConsistencyError,
    SearchOptions,
    UndefinedGapError,
    optimality_gap,
    run_astar_gcs,
    run_baseline,
)

log = logging.getLogger("astargcs")

EXIT_OK, EXIT_USER, EXIT_NO_PATH, EXIT_INTERNAL, EXIT_NUMERICAL = 0, 1, 2, 3, 4
BENCH_COLUMNS = ["map", "algo", "variant", "weight", "origin", "S_size", "iters", "lb", "ub", "gap_pct", "millis"]


def _backend(name: str):
    return conic.ADMMBackend() if name == "admm" else conic.ClarabelBackend()


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return x


def build_heuristic(graph, method: str, weight: float = 1.0, n_max: int = 100, accuracy=conic.DEFAULT_ACCURACY,
                    backend=None) -> HeuristicTable:
    if method == "h1":
        return h1_table(graph)
    if method == "h2":
        return h2_expand_freeze(graph, n_max, accuracy=accuracy, backend=backend)
    if method == "blend":
        h1 = h1_table(graph)
        if weight == 0.0:
            return blend(h1, h1, 0.0)
        return blend(h1, h2_expand_freeze(graph, n_max, accuracy=accuracy, backend=backend), weight)
    raise InputError(f"unknown heuristic method {method!r}")


# -- generate ---------------------------------------------------------------------


def cmd_generate(a) -> int:
    if a.family == "maze":
        g = gen_maze(a.rows, a.cols, a.seed)
    elif a.family == "bars":
        g = gen_bars(a.width, a.height, a.bars, a.seed)
    elif a.family == "village":
        g = gen_village(a.nx, a.ny, a.nz, a.seed, blocked=a.blocked)
    else:
        g = gen_random(a.n, a.seed)
    save_instance(g, a.out)
    print(f"{a.out}: {g.n_vertices} vertices, {len(g.edges)} edges")
    return EXIT_OK


# -- heuristic ----------------------------------------------------------------------


def cmd_heuristic(a) -> int:
    g = load_instance(a.instance)
    h = build_heuristic(g, a.method, a.weight, a.nmax, a.accuracy, _backend(a.backend))
    _write(a.out, json.dumps(h.to_json(), indent=1) + "\n")
    return EXIT_OK


# -- solve ----------------------------------------------------------------------------


def _report_header(a) -> dict:
    return {"version": __version__, "seed": a.seed, "accuracy": a.accuracy, "backend": a.backend}


def cmd_solve(a) -> int:
    g = load_instance(a.instance)
    backend = _backend(a.backend)
    opts = SearchOptions(max_iters=a.max_iters, seed=a.seed, accuracy=a.accuracy, backend=backend)
    if a.heuristic:
        h = HeuristicTable.from_json(json.loads(Path(a.heuristic).read_text()))
        h.check(g)
    else:
        h = build_heuristic(g, "blend", a.weight, a.nmax, a.accuracy, backend)
    report = _report_header(a) | {"instance": str(a.instance), "algo": a.algo, "weight": a.weight,
                                  "heuristic": h.meta}
    try:
        if a.algo == "baseline":
            res = run_baseline(g, h, opts)
        else:
            S0 = sinit_from_astar(g, h.values) if a.sinit == "astar" else {g.origin}
            report["sinit"] = a.sinit
            res = run_astar_gcs(g, h, S0, opts)
    except SolverFailure as exc:
        if exc.partial is not None:
            report["result"] = exc.partial.to_json()
            _write(a.report, json.dumps(report, indent=1, default=_num) + "\n")
        raise
    report["result"] = res.to_json()
    _write(a.report, json.dumps(report, indent=1, default=_num) + "\n")
    if a.trace:
        _write(a.trace, res.trace_csv())
    if a.report not in (None, "-"):
        gap = report["result"]["gap_pct"]
        print(f"C_lb={res.C_lb:.9g} C_f={res.C_f} gap={gap} termination={res.termination} iters={res.iterations}")
    return EXIT_OK


# -- oracle -----------------------------------------------------------------------------


def cmd_oracle(a) -> int:
    g = load_instance(a.instance)
    cost, sol = exact_opt(g, cap=a.cap)
    out = {"c_opt": cost, "path": list(sol.path), "points": sol.points.tolist()}
    _write(a.out, json.dumps(out, indent=1) + "\n")
    return EXIT_OK


# -- bench ---------------------------------------------------------------------------------


def _bench_row(name, algo, variant, w, origin, rec, lb, ub, millis):
    try:
        gap = optimality_gap(ub, lb) if ub is not None else None
    except UndefinedGapError:
        gap = None
    return [name, algo, variant, repr(float(w)), origin, rec.S_size, rec.iteration, repr(float(lb)),
            "" if ub is None else repr(float(ub)), "n/a" if gap is None else repr(gap), f"{millis:.3f}"]


def _bench_cell(job) -> list[list]:
    """All rows for one (instance, origin, weight) cell; run sequentially."""
    name, g, h1, h2, w, origin, a = job
    backend = _backend(a.backend)
    opts = SearchOptions(seed=a.seed, accuracy=a.accuracy, backend=backend)
    h = h1 if w == 0.0 else blend(h1, h2, w)
    tic = time.perf_counter()
    S0 = sinit_from_astar(g, h.values)
    t_init = time.perf_counter() - tic
    res = run_astar_gcs(g, h, S0, opts)
    first = next((r for r in res.trace if r.phase == 2), res.trace[-1])
    last = res.trace[-1]
    rows = [
        _bench_row(name, "astar-gcs", "first", w, origin, first, first.C_lb, first.C_f,
                   1000 * (first.elapsed + t_init)),
        _bench_row(name, "astar-gcs", "final", w, origin, last, last.C_lb, last.C_f,
                   1000 * (last.elapsed + t_init)),
    ]
    if a.baseline:
        b = run_baseline(g, h, opts)
        rec = b.trace[0]
        rows.append(_bench_row(name, "baseline", "final", w, origin, rec, rec.C_lb, rec.C_f, 1000 * rec.elapsed))
    return rows


def bench_rows(paths, weights, origins: int, seed: int, a) -> list[list]:
    rng = np.random.default_rng(seed)
    jobs = []
    for path in paths:
        g0 = load_instance(path)
        name = Path(path).stem
        backend = _backend(a.backend)
        h2 = h2_expand_freeze(g0, a.nmax, accuracy=a.accuracy, backend=backend) if any(w > 0 for w in weights) \
            else None
        if origins <= 1:
            cells = [(g0, "default")]
        else:
            choices = origin_choices(g0)
            picks = rng.choice(len(choices), size=min(origins, len(choices)), replace=False)
            cells = [(relocate_origin(g0, choices[i]), "-".join(map(str, choices[i]))) for i in sorted(picks)]
        for g, label in cells:
            h1 = h1_table(g)
            hh = None if h2 is None else (h2 if g is g0 else reseat_origin(h2, g))
            for w in weights:
                jobs.append((name, g, h1, hh, w, label, a))
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as ex:
            chunks = list(ex.map(_bench_cell, jobs))
    else:
        chunks = [_bench_cell(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def summarize(rows) -> list[list]:
    """Mean |S|, runtime and gap per (map, algo, variant, weight)."""
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault(tuple(r[:4]), []).append(r)
    out = []
    for key, rs in groups.items():
        gaps = [float(r[9]) for r in rs if r[9] != "n/a"]
        out.append([*key, len(rs), float(np.mean([r[5] for r in rs])), float(np.mean([float(r[10]) for r in rs])),
                    float(np.mean(gaps)) if gaps else ""])
    return out


def cmd_bench(a) -> int:
    src = Path(a.instances)
    paths = sorted(src.glob("*.json")) if src.is_dir() else [src]
    if not paths:
        raise InputError(f"no instance files under {src}")
    weights = [float(w) for w in a.weights.split(",")]
    if any(not 0 <= w <= 1 for w in weights):
        raise InputError("weights must lie in [0, 1]")
    rows = bench_rows(paths, weights, a.origins, a.seed, a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    w.writerows(rows)
    _write(a.out, buf.getvalue())
    if a.summary:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["map", "algo", "variant", "weight", "cells", "mean_S_size", "mean_millis", "mean_gap_pct"])
        w.writerows(summarize(rows))
        _write(a.summary, buf.getvalue())
    return EXIT_OK


# -- plot ------------------------------------------------------------------------------------


def _polygon_2d(cset) -> np.ndarray:
    from scipy.spatial import ConvexHull, HalfspaceIntersection

    A, b, lo, hi = cset.data
    eye = np.eye(2)
    H = np.vstack([np.hstack([A, -b[:, None]]), np.hstack([eye, -hi[:, None]]), np.hstack([-eye, lo[:, None]])])
    pts = HalfspaceIntersection(H, cset.centroid()).intersections
    return pts[ConvexHull(pts).vertices]


def render_svg(graph, path_points=None, shaded=(), scale: float = 40.0) -> str:
    """SVG drawing of a 2-D instance; ``shaded`` vertices are filled."""
    if graph.dimension != 2:
        raise InputError("plot needs a 2-D instance")
    cs = graph.centroids()
    pts = [cs]
    for s in graph.sets:
        pts.extend(np.atleast_2d(a) for a in s.data if np.ndim(a) == 1 and len(a) == 2)
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0) - 0.5, allp.max(axis=0) + 0.5

    def xy(p):
        return f"{(p[0] - lo[0]) * scale:.3f}", f"{(hi[1] - p[1]) * scale:.3f}"

    size = (hi - lo) * scale
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=f"{size[0]:.0f}", height=f"{size[1]:.0f}")
    g_edges = ET.SubElement(svg, "g", stroke="#bbbbbb", **{"stroke-width": "0.5"})
    edge_set = set(graph.edges)
    for u, v in graph.edges:
        if u < v or (v, u) not in edge_set:
            (x1, y1), (x2, y2) = xy(cs[u]), xy(cs[v])
            ET.SubElement(g_edges, "line", x1=x1, y1=y1, x2=x2, y2=y2)
    shaded = set(shaded)
    g_sets = ET.SubElement(svg, "g", stroke="#1f4e79")
    for i, s in enumerate(graph.sets):
        fill = "#9ecae1" if i in shaded else "none"
        if i in (graph.origin, graph.destination):
            fill = "#2ca02c" if i == graph.origin else "#d62728"
        if s.kind == "point":
            x, y = xy(s.data[0])
            ET.SubElement(g_sets, "circle", cx=x, cy=y, r="4", fill=fill)
        elif s.kind == "segment":
            (x1, y1), (x2, y2) = xy(s.data[0]), xy(s.data[1])
            color = "#1f77b4" if i in shaded else "#1f4e79"
            ET.SubElement(g_sets, "line", x1=x1, y1=y1, x2=x2, y2=y2, stroke=color,
                          **{"stroke-width": "4" if i in shaded else "2"})
        elif s.kind == "box":
            a, b = s.data
            x, y = xy([a[0], b[1]])
            ET.SubElement(g_sets, "rect", x=x, y=y, width=f"{(b[0] - a[0]) * scale:.3f}",
                          height=f"{(b[1] - a[1]) * scale:.3f}", fill=fill, **{"fill-opacity": "0.5"})
        else:
            poly = " ".join(",".join(xy(p)) for p in _polygon_2d(s))
            ET.SubElement(g_sets, "polygon", points=poly, fill=fill, **{"fill-opacity": "0.5"})
    if path_points is not None and len(path_points):
        ET.SubElement(svg, "polyline", points=" ".join(",".join(xy(p)) for p in path_points), fill="none",
                      stroke="#ff7f0e", **{"stroke-width": "2.5"})
    return ET.tostring(svg, encoding="unicode") + "\n"


def cmd_plot(a) -> int:
    g = load_instance(a.instance)
    points, shaded = None, ()
    if a.report:
        res = json.loads(Path(a.report).read_text())["result"]
        if res.get("best_feasible"):
            points = np.array(res["best_feasible"]["points"])
        shaded = res.get("S_final", ())
    _write(a.out, render_svg(g, points, shaded))
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="astargcs", description="Shortest paths in graphs of convex sets.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--accuracy", type=float, default=conic.DEFAULT_ACCURACY)
        sp.add_argument("--backend", choices=["clarabel", "admm"], default="clarabel")

    sp = sub.add_parser("generate", help="write a generated instance")
    sp.add_argument("family", choices=["maze", "bars", "village", "random"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rows", type=int, default=20)
    sp.add_argument("--cols", type=int, default=20)
    sp.add_argument("--width", type=int, default=20)
    sp.add_argument("--height", type=int, default=20)
    sp.add_argument("--bars", type=int, default=12)
    sp.add_argument("--nx", type=int, default=6)
    sp.add_argument("--ny", type=int, default=6)
    sp.add_argument("--nz", type=int, default=3)
    sp.add_argument("--blocked", type=float, default=0.3)
    sp.add_argument("--n", type=int, default=8, help="vertex count for random instances")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("heuristic", help="write a heuristic table")
    sp.add_argument("instance")
    sp.add_argument("--method", choices=["h1", "h2", "blend"], default="h2")
    sp.add_argument("--nmax", type=int, default=100)
    sp.add_argument("--weight", type=float, default=1.0)
    sp.add_argument("-o", "--out", default="-")
    solver_flags(sp)
    sp.set_defaults(func=cmd_heuristic)

    sp = sub.add_parser("solve", help="run A*-GCS or the full-graph baseline")
    sp.add_argument("instance")
    sp.add_argument("--algo", choices=["astar-gcs", "baseline"], default="astar-gcs")
    sp.add_argument("--sinit", choices=["source", "astar"], default="source")
    sp.add_argument("--weight", type=float, default=1.0)
    sp.add_argument("--nmax", type=int, default=100)
    sp.add_argument("--heuristic", help="precomputed heuristic table (overrides --weight)")
    sp.add_argument("--max-iters", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--report", default="-")
    sp.add_argument("--trace")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="exact solve by path enumeration (small instances only)")
    sp.add_argument("instance")
    sp.add_argument("--cap", type=int, default=100_000)
    sp.add_argument("-o", "--out", default="-")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="sweep origins and weights over instances")
    sp.add_argument("instances", help="instance file or directory of *.json")
    sp.add_argument("--weights", default="0,1")
    sp.add_argument("--origins", type=int, default=1, help="random origins per instance (1 keeps the stored one)")
    sp.add_argument("--nmax", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--baseline", action="store_true", help="also run the full-graph baseline")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("-o", "--out", default="-")
    sp.add_argument("--summary")
    solver_flags(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("plot", help="render a 2-D instance (and a solve report) to SVG")
    sp.add_argument("instance")
    sp.add_argument("--report")
    sp.add_argument("-o", "--out", default="-")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NoPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InternalConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (GcsError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
