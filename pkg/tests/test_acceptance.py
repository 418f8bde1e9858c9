"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one pass/fail line, printed in the pytest terminal
summary under "acceptance criteria" (and echoed to stdout for ``-s`` runs).
"""
import functools
import statistics
import time

import numpy as np
import pytest
from conftest import (
    ACCEPTANCE,
    N_ORACLE,
    SAMPLE_SETS,
    oracle_costs,
    oracle_instance,
    sample_in,
    sample_out,
)

from astargcs import cli
from astargcs.core import ConvexSet, GcsGraph, HeuristicTable, neighborhood, perspective_membership
from astargcs.heuristics import (
    blend,
    classic_astar,
    h1_table,
    h2_expand_freeze,
    reseat_origin,
    sinit_from_astar,
)
from astargcs.instances import gen_maze, gen_random, gen_village, origin_choices, relocate_origin
from astargcs.oracle import check_admissible
from astargcs.relaxation import relaxation_residuals, solve_sppstar
from astargcs.search import optimality_gap, run_astar_gcs, run_baseline, two_step_feasible

ACCURACY = 1e-7
WEIGHTS_1 = (0.0, 0.5, 1.0)
BLEND_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)


def record(k: int, ok: bool, detail: str):
    ACCEPTANCE[k] = (ok, detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def tol(c):
    return 1e-6 * max(1.0, c)


@functools.lru_cache(maxsize=None)
def h2_of(k: int, n_max: int = 100) -> HeuristicTable:
    return h2_expand_freeze(oracle_instance(k), n_max)


# every (graph, RunResult) produced by this module, for the termination check
RUNS: list = []


@functools.lru_cache(maxsize=None)
def criterion1_runs():
    out = []
    for k in range(N_ORACLE):
        g = oracle_instance(k)
        h1 = h1_table(g)
        for w in WEIGHTS_1:
            h = h1 if w == 0.0 else blend(h1, h2_of(k), w)
            for mode in ("source", "astar"):
                S0 = {g.origin} if mode == "source" else sinit_from_astar(g, h.values)
                out.append((k, w, mode, g, run_astar_gcs(g, h, S0)))
    RUNS.extend((g, r) for *_, g, r in out)
    return out


@functools.lru_cache(maxsize=None)
def criterion3_runs():
    out = []
    for seed in range(50):
        g = gen_random(12, 5000 + seed, max_edges=30, kinds=("point",))
        h = h1_table(g)  # Euclidean distance to a point destination: consistent on singletons
        res = run_astar_gcs(g, h, {g.origin})
        out.append((g, res, classic_astar(g, g.centroids(), h.values)[1]))
    RUNS.extend((g, r) for g, r, _ in out)
    return out


def test_criterion_1_oracle_bound_validity():
    tic = time.perf_counter()
    bad_lb, bad_f, n_lb = [], [], 0
    for k, w, mode, g, res in criterion1_runs():
        c = oracle_costs(k)[g.origin]
        for r in res.trace:
            n_lb += 1
            if r.C_lb > c + tol(c):
                bad_lb.append((k, w, mode, r.iteration, r.C_lb, c))
        if res.best_feasible is not None:
            res.best_feasible.check(g)
            if res.best_feasible.cost < c - 1e-6:
                bad_f.append((k, w, mode, res.best_feasible.cost, c))
    secs = time.perf_counter() - tic
    record(1, not bad_lb and not bad_f,
           f"{len(criterion1_runs())} runs, {n_lb} reported bounds; {len(bad_lb)} bound and "
           f"{len(bad_f)} feasible violations ({secs:.0f}s)")


def test_criterion_2_cut_set_bounds():
    rng = np.random.default_rng(2024)
    checked = two_terminal = 0
    bad = []
    while checked < 200:
        k = int(rng.integers(N_ORACLE))
        g = oracle_instance(k)
        others = [v for v in range(g.n_vertices) if v not in (g.origin, g.destination)]
        S = {g.origin} | {v for v in others if rng.uniform() < 0.5}
        N = neighborhood(g, S)
        if not N:
            continue
        c = oracle_costs(k)[g.origin]
        h = HeuristicTable.zeros(g) if checked % 2 else h1_table(g)
        r = solve_sppstar(g, S, N, h, accuracy=ACCURACY).objective
        if r > c + tol(c):
            bad.append(("thm1", k, sorted(S), r, c))
        if g.destination in N and len(N) > 1:
            two_terminal += 1
            rest = [v for v in N if v != g.destination]
            rf = solve_sppstar(g, S, rest, h, accuracy=ACCURACY).objective
            rd = solve_sppstar(g, S, [g.destination], h, accuracy=ACCURACY).objective
            if min(rf, rd) > c + tol(c):
                bad.append(("thm2", k, sorted(S), min(rf, rd), c))
        checked += 1
    record(2, not bad, f"{checked} cut-sets ({two_terminal} with the two-terminal split); {len(bad)} violations")


def test_criterion_3_singleton_degeneration():
    bad = []
    for g, res, c_astar in criterion3_runs():
        if abs(res.C_lb - c_astar) > 1e-6 or res.iterations > g.n_vertices - 1:
            bad.append((res.C_lb, c_astar, res.iterations))
    record(3, not bad, f"50 singleton graphs; {len(bad)} mismatches with classic A* or iteration overruns")


def test_criterion_4_termination():
    criterion1_runs()
    criterion3_runs()
    bad = 0
    for g, res in RUNS:
        sizes = [r.S_size for r in res.trace]
        if res.iterations > g.n_vertices - 1 or any(a >= b for a, b in zip(sizes, sizes[1:])):
            bad += 1
    record(4, bad == 0, f"{len(RUNS)} runs; {bad} with more than |V|-1 iterations or non-increasing |S|")


def test_criterion_5_admissibility():
    bad = []
    collapsed = 0
    for k in range(N_ORACLE):
        g = oracle_instance(k)
        copt = oracle_costs(k)
        h1 = h1_table(g)
        tables = {"h1": h1}
        for n_max in (3, 100):
            h2 = h2_of(k, n_max)
            collapsed += h2.meta["collapses"] > 0
            tables[f"h2[{n_max}]"] = h2
            for w in BLEND_WEIGHTS:
                tables[f"blend[{n_max},{w}]"] = blend(h1, h2, w)
        for name, h in tables.items():
            rep = check_admissible(g, h.values, c_opt=copt)
            if not rep.ok:
                bad.append((k, name, rep.violations))
    record(5, not bad and collapsed > 0,
           f"{N_ORACLE} instances x 13 tables; {len(bad)} with violations; shrink path taken on {collapsed} instances")


@pytest.mark.slow
def test_criterion_6_maze_reproduction():
    g0 = gen_maze(20, 20, 7)
    tic = time.perf_counter()
    h2 = h2_expand_freeze(g0)
    h2_secs = time.perf_counter() - tic
    rng = np.random.default_rng(6)
    choices = origin_choices(g0)
    picks = rng.choice(len(choices), size=20, replace=False)
    full = g0.n_vertices - 1
    finals, reductions, gap_diffs, own_diffs, faster = [], [], [], [], []
    for i in picks:
        g = relocate_origin(g0, choices[i])
        h = reseat_origin(h2, g)
        t0 = time.perf_counter()
        S0 = sinit_from_astar(g, h.values)
        t_init = time.perf_counter() - t0
        res = run_astar_gcs(g, h, S0)
        base = run_baseline(g, h)
        RUNS.append((g, res))
        finals.append(len(res.S_final))
        reductions.append(1.0 - len(res.S_final) / full)
        c_f = min(res.C_f, base.C_f)
        gap_diffs.append(abs(optimality_gap(c_f, res.C_lb) - optimality_gap(c_f, base.C_lb)))
        own_diffs.append(abs(res.gap() - base.gap()))
        first = next(r for r in res.trace if r.phase == 2)
        faster.append(t_init + first.solve_seconds < base.trace[0].solve_seconds)
    frac_small = np.mean([s < full for s in finals])
    med = statistics.median(reductions)
    ok_a = frac_small >= 0.9 and med >= 0.30
    ok_b = max(gap_diffs) <= 1.0
    ok_c = np.mean(faster) >= 0.5
    record(6, ok_a and ok_b and ok_c,
           f"(a) |S|<|V|-1 for {100 * frac_small:.0f}% of origins, median reduction {100 * med:.1f}%; "
           f"(b) max gap difference {max(gap_diffs):.2e} pp ({max(own_diffs):.2e} pp with each run's own "
           f"feasible cost); (c) first iteration faster for "
           f"{100 * np.mean(faster):.0f}% of origins; h2 built in {h2_secs:.1f}s")


def _relaxation_cases():
    poly = ConvexSet.hpolytope([[1.0, 1.0], [-1.0, 1.0]], [2.5, 0.5], [0, 0], [2, 2])
    g = GcsGraph(
        (ConvexSet.point([-1, 0]), poly, ConvexSet.segment([0, 2.5], [2, 3]), ConvexSet.box([3, 0], [4, 1]),
         ConvexSet.point([5, 2])),
        ((0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4), (2, 1)), 0, 4,
    )
    yield g, {0}, [1, 2]
    yield g, {0, 1, 2, 3}, [4]
    v = gen_village(3, 3, 2, 1)
    yield v, set(range(v.n_vertices)) - {v.destination}, [v.destination]
    for k in range(0, N_ORACLE, 4):
        g = oracle_instance(k)
        yield g, set(range(g.n_vertices)) - {g.destination}, [g.destination]


def test_criterion_7_perspective_correctness():
    rng = np.random.default_rng(7)
    misses = {}
    for kind, cset in SAMPLE_SETS.items():
        fn = sum(not perspective_membership(cset, lam * sample_in(cset, rng), lam)
                 for lam in rng.uniform(0, 10, 1000))
        fp = sum(perspective_membership(cset, lam * sample_out(cset, rng), lam)
                 for lam in rng.uniform(0.5, 10, 1000))
        misses[kind] = (fn, fp)
    worst, n = 0.0, 0
    for g, S, Sp in _relaxation_cases():
        sol = solve_sppstar(g, S, Sp, HeuristicTable.zeros(g), accuracy=ACCURACY)
        res = relaxation_residuals(g, sol, tol=10 * ACCURACY)
        worst = max(worst, max(res.values()))
        n += 1
    ok = all(a == 0 and b == 0 for a, b in misses.values()) and worst <= 10 * ACCURACY
    record(7, ok, f"(interior misses, exterior hits) per kind {misses}; {n} relaxations, "
                  f"worst residual {worst:.1e} vs bound {10 * ACCURACY:.0e}")


def test_criterion_8_two_step_dominance():
    bad = []
    for k in range(N_ORACLE):
        g = oracle_instance(k)
        h = h1_table(g)
        centroid_cost = classic_astar(g, g.centroids(), h.values)[1]
        sol = two_step_feasible(g, h)
        sol.check(g)
        c = oracle_costs(k)[g.origin]
        if sol.cost > centroid_cost + 1e-9 or sol.cost < c - 1e-6:
            bad.append((k, sol.cost, centroid_cost, c))
    record(8, not bad, f"{N_ORACLE} instances; {len(bad)} violations")


def test_criterion_9_bench_determinism(tmp_path):
    d = tmp_path / "maps"
    d.mkdir()
    cli.main(["generate", "maze", "--rows", "5", "--cols", "5", "--seed", "1", "-o", str(d / "maze.json")])
    cli.main(["generate", "bars", "--width", "9", "--height", "9", "--bars", "5", "--seed", "2",
              "-o", str(d / "bars.json")])
    outs = []
    for i in range(2):
        out = tmp_path / f"b{i}.csv"
        cli.main(["bench", str(d), "--weights", "0,0.5,1", "--origins", "3", "--baseline", "--seed", "11",
                  "-o", str(out)])
        lines = out.read_text().splitlines()
        outs.append("\n".join(line.rsplit(",", 1)[0] for line in lines))
    n_rows = outs[0].count("\n")
    record(9, outs[0] == outs[1] and n_rows == 2 * 3 * 3 * 3,
           f"two bench runs, {n_rows} rows each; identical apart from millis: {outs[0] == outs[1]}")
