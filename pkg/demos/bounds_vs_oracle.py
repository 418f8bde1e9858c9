"""
Every bound reported along an A*-GCS run, next to the exact optimum found by
enumerating all simple paths.
"""
from astargcs import exact_opt, gen_random, h1_table, run_astar_gcs

for seed in range(5):
    g = gen_random(9, seed)
    c_opt, best = exact_opt(g)
    res = run_astar_gcs(g, h1_table(g))
    bounds = ", ".join(f"{r.C_lb:.4f}" for r in res.trace)
    print(f"seed {seed}: C_opt={c_opt:.4f} via {best.path}; bounds [{bounds}]; feasible {res.C_f}")
