import functools

import numpy as np
import pytest

from astargcs.core import ConvexSet, GcsGraph
from astargcs.instances import gen_random


def tri() -> GcsGraph:
    # s=0, a=1, d=2
    sets = (ConvexSet.point([0, 0]), ConvexSet.segment([1, -1], [1, 1]), ConvexSet.point([2, 0]))
    return GcsGraph(sets, ((0, 1), (1, 2)), 0, 2)


def tri_shifted() -> GcsGraph:
    # segment centroid (1, 1) is off the straight line, so re-optimizing helps
    sets = (ConvexSet.point([0, 0]), ConvexSet.segment([1, 0], [1, 2]), ConvexSet.point([2, 0]))
    return GcsGraph(sets, ((0, 1), (1, 2)), 0, 2)


def diamond() -> GcsGraph:
    sets = (
        ConvexSet.point([0, 0]),
        ConvexSet.box([1, 1], [2, 2]),
        ConvexSet.box([1, -2], [2, -1]),
        ConvexSet.point([3, 0]),
    )
    return GcsGraph(sets, ((0, 1), (0, 2), (1, 3), (2, 3)), 0, 3)


def chain() -> GcsGraph:
    sets = (ConvexSet.point([0.0]), ConvexSet.point([1.0]), ConvexSet.point([3.0]))
    return GcsGraph(sets, ((0, 1), (1, 2)), 0, 2)


@pytest.fixture
def TRI():
    return tri()


@pytest.fixture
def DIAMOND():
    return diamond()


@pytest.fixture
def CHAIN():
    return chain()


N_ORACLE = 100


@functools.lru_cache(maxsize=None)
def oracle_instance(k: int) -> GcsGraph:
    """The k-th seeded oracle-sized instance: 2-D, 4 to 9 vertices, at most 20 edges."""
    n = 4 + k % 6
    return gen_random(n, seed=1000 + k, max_edges=min(20, n * (n - 1)))


@functools.lru_cache(maxsize=None)
def oracle_costs(k: int) -> dict:
    from astargcs.oracle import cost_to_go

    return cost_to_go(oracle_instance(k))


def grid_min(f, lo, hi, n=401):
    """Brute-force minimum of ``f`` over a box, by a dense grid then a finer local grid."""
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys)
    F = f(X, Y)
    i = np.unravel_index(np.argmin(F), F.shape)
    cx, cy = X[i], Y[i]
    hx, hy = (hi[0] - lo[0]) / (n - 1), (hi[1] - lo[1]) / (n - 1)
    xs = np.linspace(max(lo[0], cx - hx), min(hi[0], cx + hx), n)
    ys = np.linspace(max(lo[1], cy - hy), min(hi[1], cy + hy), n)
    X, Y = np.meshgrid(xs, ys)
    return float(f(X, Y).min())


SAMPLE_SETS = {
    "point": ConvexSet.point([0.3, -1.2]),
    "segment": ConvexSet.segment([-1.0, 0.5], [2.0, 1.5]),
    "box": ConvexSet.box([0.0, -1.0], [2.0, 0.5]),
    "hpolytope": ConvexSet.hpolytope([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 1.0], [0.0, 0.0], [1.0, 1.0]),
}


def sample_in(cset: ConvexSet, rng) -> np.ndarray:
    if cset.kind == "point":
        return cset.data[0].copy()
    if cset.kind == "segment":
        a, b = cset.data
        return a + rng.uniform() * (b - a)
    if cset.kind == "box":
        lo, hi = cset.data
        return lo + rng.uniform(size=len(lo)) * (hi - lo)
    A, b, lo, hi = cset.data
    while True:
        x = lo + rng.uniform(size=len(lo)) * (hi - lo)
        if np.all(A @ x <= b):
            return x


def sample_out(cset: ConvexSet, rng, margin: float = 0.05) -> np.ndarray:
    """A point at least ``margin`` away from the set (in the max norm or along a facet normal)."""
    if cset.kind == "point":
        u = rng.normal(size=cset.dim)
        return cset.data[0] + (margin + rng.uniform()) * u / np.abs(u).max()
    if cset.kind == "segment":
        a, b = cset.data
        d = (b - a) / np.linalg.norm(b - a)
        if rng.uniform() < 0.5:
            normal = np.array([-d[1], d[0]]) * rng.choice([-1, 1])
            return a + rng.uniform() * (b - a) + (margin + rng.uniform()) * normal / np.abs(normal).max() * 1.5
        end, sign = (b, 1) if rng.uniform() < 0.5 else (a, -1)
        return end + sign * (margin + rng.uniform()) * d / np.abs(d).max() * 1.5
    lo, hi = (cset.data[0], cset.data[1]) if cset.kind == "box" else (cset.data[2], cset.data[3])
    while True:
        x = lo - 1.0 + rng.uniform(size=len(lo)) * (hi - lo + 2.0)
        gap = max(np.max(lo - x), np.max(x - hi))
        if cset.kind == "hpolytope":
            A, b = cset.data[0], cset.data[1]
            gap = max(gap, np.max((A @ x - b) / np.linalg.norm(A, axis=1)))
        if gap >= margin:
            return x


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
