"""
Lower bounds from the cut-set relaxation on a three-vertex instance.

The origin is a point, the middle vertex a vertical segment and the
destination another point. Growing the cut-set tightens the bound until it
meets the true shortest path length.
"""
from astargcs import ConvexSet, GcsGraph, HeuristicTable, solve_sppstar

g = GcsGraph(
    (ConvexSet.point([0, 0]), ConvexSet.segment([1, -1], [1, 1]), ConvexSet.point([2, 0])),
    ((0, 1), (1, 2)),
    origin=0,
    destination=2,
)
h = HeuristicTable.zeros(g)

r = solve_sppstar(g, {0}, {1}, h)
print(f"S={{s}},   S'={{a}}: R* = {r.objective:.6f}")

r = solve_sppstar(g, {0, 1}, {2}, h)
print(f"S={{s,a}}, S'={{d}}: R* = {r.objective:.6f}")
print("point chosen in the segment:", r.zp[0] / r.y[0])

# a heuristic on the terminal is simply added to the travel cost
r = solve_sppstar(g, {0}, {1}, HeuristicTable([0.0, 5.0, 0.0]))
print(f"with h(a)=5:       R* = {r.objective:.6f}")
