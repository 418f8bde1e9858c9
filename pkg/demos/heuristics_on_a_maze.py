"""
Compare the two cost-to-go estimates on a small maze and confirm both never
overestimate, using the brute-force oracle.
"""
import numpy as np

from astargcs import blend, check_admissible, gen_maze, h1_table, h2_expand_freeze

g = gen_maze(4, 4, seed=3)
h1 = h1_table(g)
h2 = h2_expand_freeze(g, n_max=100)
small = h2_expand_freeze(g, n_max=3)  # forces the collapse step

print(f"{g.n_vertices} vertices, {len(g.edges)} edges")
print("h1 at origin:", round(h1[g.origin], 4))
print("h2 at origin:", round(h2[g.origin], 4), h2.meta)
print("h2 (n_max=3):", round(small[g.origin], 4), "collapses:", small.meta["collapses"])

for w in (0.0, 0.5, 1.0):
    h = blend(h1, h2, w)
    rep = check_admissible(g, h.values)
    print(f"w={w}: mean h = {np.mean(h.values):.3f}, admissible = {rep.ok}")
